#include "qcspec/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "qcspec/error.hpp"

namespace qcspec {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw_input("normal quantile needs p in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

namespace {

// Nodes on (0, 2) and matching weights, built from the positive half of an
// N-point Gauss-Legendre rule on [-1, 1] reflected about 1.
struct HalfRule {
  std::array<double, 20> x{};
  std::array<double, 20> w{};
  int size = 0;
};

template <unsigned N>
HalfRule make_rule() {
  using Rule = boost::math::quadrature::gauss<double, N>;
  HalfRule r;
  const auto& a = Rule::abscissa();
  const auto& wt = Rule::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.x[r.size] = 1.0 - a[i];
    r.w[r.size++] = wt[i];
    r.x[r.size] = 1.0 + a[i];
    r.w[r.size++] = wt[i];
  }
  return r;
}

const HalfRule& rule_for(double abs_r) {
  static const HalfRule r6 = make_rule<6>();
  static const HalfRule r12 = make_rule<12>();
  static const HalfRule r20 = make_rule<20>();
  if (abs_r < 0.3) return r6;
  if (abs_r < 0.75) return r12;
  return r20;
}

// Upper orthant probability P(X > dh, Y > dk).
double bvnu(double dh, double dk, double r) {
  if (r == 0.0) return normal_cdf(-dh) * normal_cdf(-dk);
  constexpr double tp = 2.0 * std::numbers::pi;
  const HalfRule& g = rule_for(std::abs(r));
  double h = dh;
  double k = dk;
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = 0.5 * (h * h + k * k);
    const double asr = 0.5 * std::asin(r);
    for (int i = 0; i < g.size; ++i) {
      const double sn = std::sin(asr * g.x[i]);
      bvn += g.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
    return bvn * asr / tp + normal_cdf(-h) * normal_cdf(-k);
  }
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  const double as = 1.0 - r * r;
  double a = std::sqrt(as);
  const double bs = (h - k) * (h - k);
  const double c = (4.0 - hk) / 8.0;
  const double d = (12.0 - hk) / 80.0;
  double asr = -0.5 * (bs / as + hk);
  if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
  if (hk > -100.0) {
    const double b = std::sqrt(bs);
    const double sp = std::sqrt(tp) * normal_cdf(-b / a);
    bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
  }
  a *= 0.5;
  double sum = 0.0;
  for (int i = 0; i < g.size; ++i) {
    const double xs = (a * g.x[i]) * (a * g.x[i]);
    asr = -0.5 * (bs / xs + hk);
    if (!(asr > -100.0)) continue;
    const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
    const double rs = std::sqrt(1.0 - xs);
    const double ep = std::exp(-0.5 * hk * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
    sum += g.w[i] * std::exp(asr) * (sp - ep);
  }
  bvn = (a * sum - bvn) / tp;
  if (r > 0.0) return bvn + normal_cdf(-std::max(h, k));
  if (h >= k) return -bvn;
  const double span = h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
  return span - bvn;
}

}  // namespace

double bvn_cdf(double h, double k, double rho) {
  if (!(std::abs(rho) < 1.0)) throw_input("bivariate normal needs |rho| < 1");
  if (std::isnan(h) || std::isnan(k)) throw_input("bivariate normal limits must not be NaN");
  if (h == -INFINITY || k == -INFINITY) return 0.0;
  if (h == INFINITY) return normal_cdf(k);
  if (k == INFINITY) return normal_cdf(h);
  return std::clamp(bvnu(-h, -k, rho), 0.0, 1.0);
}

}  // namespace qcspec
