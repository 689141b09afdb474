#include "qcspec/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

#include "qcspec/error.hpp"
#include "qcspec/series.hpp"

namespace qcspec {

namespace {

constexpr double kDomainSlack = 1e-12;

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

SplineBasis::SplineBasis(double lo, double hi, std::vector<double> interior_knots, int degree)
    : lo_(lo), hi_(hi), degree_(degree) {
  if (degree < 0 || degree > 5) throw_input("spline degree must be in 0..5");
  if (lo == hi) {
    if (degree != 0 || !interior_knots.empty()) throw_input("degenerate interval supports only the constant basis");
  } else if (!(hi > lo)) {
    throw_input("spline interval must satisfy lo < hi");
  }
  for (std::size_t i = 0; i < interior_knots.size(); ++i) {
    const double k = interior_knots[i];
    if (!(k > lo && k < hi)) throw_input("interior knots must lie strictly inside the interval");
    if (i > 0 && !(k > interior_knots[i - 1])) throw_input("interior knots must increase");
  }
  knots_.assign(degree + 1, lo);
  knots_.insert(knots_.end(), interior_knots.begin(), interior_knots.end());
  knots_.insert(knots_.end(), degree + 1, hi);
}

SplineBasis SplineBasis::uniform(double lo, double hi, int num_basis, int degree) {
  const int interior = num_basis - degree - 1;
  if (interior < 0) throw_input("too few basis functions for the spline degree");
  std::vector<double> knots(interior);
  for (int i = 0; i < interior; ++i) knots[i] = lo + (hi - lo) * (i + 1) / (interior + 1);
  return SplineBasis(lo, hi, std::move(knots), degree);
}

SplineBasis SplineBasis::for_levels(const QuantileGrid& alphas, int num_basis) {
  if (num_basis < 1) throw_input("need at least one basis function");
  const int levels = static_cast<int>(alphas.size());
  if (levels == 1) return SplineBasis(alphas.front(), alphas.front(), {}, 0);
  const int k = std::min(num_basis, levels);
  const int degree = std::min(3, k - 1);
  return uniform(alphas.front(), alphas.back(), k, degree);
}

Eigen::VectorXd SplineBasis::values_of_degree(double x, int q) const {
  const auto m = static_cast<int>(knots_.size());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m - 1);
  // Locate the span; the right endpoint belongs to the last non-empty span.
  int span = -1;
  for (int i = 0; i < m - 1; ++i)
    if (knots_[i] < knots_[i + 1] && knots_[i] <= x && (x < knots_[i + 1] || (x >= hi_ && knots_[i + 1] >= hi_)))
      span = i;
  if (span < 0) return Eigen::VectorXd::Zero(m - q - 1);
  b[span] = 1.0;
  for (int deg = 1; deg <= q; ++deg) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(m - deg - 1);
    for (int i = 0; i < m - deg - 1; ++i) {
      const double left = safe_ratio(x - knots_[i], knots_[i + deg] - knots_[i]);
      const double right = safe_ratio(knots_[i + deg + 1] - x, knots_[i + deg + 1] - knots_[i + 1]);
      next[i] = left * b[i] + right * b[i + 1];
    }
    b = std::move(next);
  }
  return b;
}

Eigen::VectorXd SplineBasis::eval_derivative(double alpha, int order) const {
  if (!(alpha >= lo_ - kDomainSlack && alpha <= hi_ + kDomainSlack)) throw_input("out of domain");
  if (order < 0) throw_input("negative derivative order");
  const int k = size();
  if (lo_ == hi_) return order == 0 ? Eigen::VectorXd::Ones(1) : Eigen::VectorXd::Zero(1);
  if (order > degree_) return Eigen::VectorXd::Zero(k);
  const double x = std::clamp(alpha, lo_, hi_);
  const auto m = static_cast<int>(knots_.size());
  Eigen::VectorXd v = values_of_degree(x, degree_ - order);
  for (int q = degree_ - order + 1; q <= degree_; ++q) {
    Eigen::VectorXd next(m - q - 1);
    for (int i = 0; i < m - q - 1; ++i)
      next[i] = q * (safe_ratio(v[i], knots_[i + q] - knots_[i]) -
                     safe_ratio(v[i + 1], knots_[i + q + 1] - knots_[i + 1]));
    v = std::move(next);
  }
  return v;
}

Eigen::VectorXd SplineBasis::eval(double alpha) const { return eval_derivative(alpha, 0); }

Eigen::MatrixXd SplineBasis::design(std::span<const double> xs) const {
  Eigen::MatrixXd b(static_cast<Eigen::Index>(xs.size()), size());
  for (std::size_t i = 0; i < xs.size(); ++i) b.row(static_cast<Eigen::Index>(i)) = eval(xs[i]).transpose();
  return b;
}

Eigen::MatrixXd penalty_matrix(const SplineBasis& basis, PenaltyMode mode, std::span<const double> grid) {
  if (basis.degree() < 2) throw_input("penalty undefined");
  const int k = basis.size();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(k, k);
  if (mode == PenaltyMode::grid_sum) {
    if (grid.empty()) throw_input("grid-sum penalty needs the quantile grid");
    for (double x : grid) {
      const Eigen::VectorXd d2 = basis.eval_derivative(x, 2);
      q.noalias() += d2 * d2.transpose();
    }
    return q;
  }
  // phi'' has degree <= 3 on each span, so products have degree <= 6 and the
  // 5-point rule is exact.
  using Rule = boost::math::quadrature::gauss<double, 5>;
  const auto& nodes = Rule::abscissa();
  const auto& weights = Rule::weights();
  const auto knots = basis.knots();
  for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
    const double a = knots[s];
    const double b = knots[s + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const int signs = nodes[i] == 0.0 ? 1 : 2;
      for (int sgn = 0; sgn < signs; ++sgn) {
        const double x = mid + (sgn == 0 ? nodes[i] : -nodes[i]) * half;
        const Eigen::VectorXd d2 = basis.eval_derivative(x, 2);
        q.noalias() += (weights[i] * half) * d2 * d2.transpose();
      }
    }
  }
  return q;
}

namespace {

bool strictly_increasing(std::span<const double> x) {
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) return false;
  return true;
}

struct SmootherSystem {
  Eigen::MatrixXd design;
  Eigen::MatrixXd gram;
  Eigen::VectorXd rhs;
  Eigen::VectorXd y;
  const Eigen::MatrixXd* penalty;
  // Demmler-Reinsch form, available when the design has full column rank:
  // B = QR, R^{-T} P R^{-1} = U diag(d) U', coefficients R^{-1} U diag(s) z with
  // s = 1 / (1 + lambda d) and z = U' Q' y.
  bool spectral = false;
  Eigen::MatrixXd rinv_u;
  Eigen::VectorXd d;
  Eigen::VectorXd z;
  double resid0 = 0.0;  ///< ||y||^2 - ||Q' y||^2
};

void prepare_spectral(SmootherSystem& sys) {
  const Eigen::Index m = sys.design.rows();
  const Eigen::Index k = sys.design.cols();
  if (m < k) return;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(sys.design);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::VectorXd diag = r.diagonal().cwiseAbs();
  if (!(diag.minCoeff() > 1e-10 * diag.maxCoeff())) return;
  const Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd pt = rinv.transpose() * *sys.penalty * rinv;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (pt + pt.transpose()));
  if (es.info() != Eigen::Success) return;
  sys.d = es.eigenvalues();
  // Null-space eigenvalues come back as rounding noise; they are exactly zero.
  const double tol = 1e-12 * std::max(sys.d.cwiseAbs().maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < k; ++i)
    if (sys.d[i] < tol) sys.d[i] = 0.0;
  const Eigen::VectorXd qty = (qr.householderQ().transpose() * sys.y).head(k);
  sys.rinv_u = rinv * es.eigenvectors();
  sys.z = es.eigenvectors().transpose() * qty;
  sys.resid0 = std::max(0.0, sys.y.squaredNorm() - qty.squaredNorm());
  sys.spectral = true;
}

void finish_gcv(SmoothFit& fit, double m) {
  const double resid_df = m - fit.edf;
  fit.gcv_value = resid_df > 1e-9 * m ? m * fit.rss / (resid_df * resid_df) : std::numeric_limits<double>::infinity();
}

SmoothFit solve_smoother(const SmootherSystem& sys, double lambda) {
  const auto m = static_cast<double>(sys.design.rows());
  const Eigen::Index k = sys.design.cols();
  SmoothFit fit;
  fit.lambda = lambda;
  if (sys.spectral) {
    const Eigen::ArrayXd shrink = 1.0 / (1.0 + lambda * sys.d.array());
    fit.coeffs = sys.rinv_u * (shrink * sys.z.array()).matrix();
    fit.rss = sys.resid0 + ((1.0 - shrink) * sys.z.array()).square().sum();
    fit.edf = shrink.sum();
    finish_gcv(fit, m);
    return fit;
  }
  if (lambda == 0.0 && k > sys.design.rows()) throw_estimation("underdetermined; supply lambda>0");
  Eigen::LLT<Eigen::MatrixXd> llt(sys.gram + lambda * *sys.penalty);
  if (llt.info() != Eigen::Success)
    throw_estimation(lambda == 0.0 ? "underdetermined; supply lambda>0" : "singular smoothing system");
  fit.coeffs = llt.solve(sys.rhs);
  fit.rss = (sys.y - sys.design * fit.coeffs).squaredNorm();
  fit.edf = llt.solve(sys.gram).trace();
  finish_gcv(fit, m);
  return fit;
}

SmootherSystem build_system(const SplineBasis& basis, const Eigen::MatrixXd& penalty, std::span<const double> x,
                            std::span<const double> y) {
  if (x.size() != y.size()) throw_input("x and y lengths differ");
  if (x.empty()) throw_input("empty input");
  if (!strictly_increasing(x)) throw_input("grid must be strictly increasing");
  if (penalty.rows() != basis.size() || penalty.cols() != basis.size()) throw_input("penalty dimension mismatch");
  SmootherSystem sys;
  sys.design = basis.design(x);
  sys.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  sys.gram = sys.design.transpose() * sys.design;
  sys.rhs = sys.design.transpose() * sys.y;
  sys.penalty = &penalty;
  prepare_spectral(sys);
  return sys;
}

}  // namespace

SmoothFit smooth_spline_fit(const SplineBasis& basis, const Eigen::MatrixXd& penalty, std::span<const double> x,
                            std::span<const double> y, std::optional<double> lambda, const LambdaSearch& search) {
  const SmootherSystem sys = build_system(basis, penalty, x, y);
  if (lambda) {
    if (!(*lambda >= 0.0)) throw_input("lambda must be nonnegative");
    return solve_smoother(sys, *lambda);
  }
  const auto gcv = [&](double lam) {
    try {
      return solve_smoother(sys, lam).gcv_value;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const ScalarMinimum best = minimize_log_scale(gcv, search);
  return solve_smoother(sys, best.x);
}

SmoothFit smooth_spline_fit(std::span<const double> x, std::span<const double> y, std::optional<double> lambda) {
  if (x.size() < 4) throw_input("smoothing needs at least 4 grid points");
  if (!strictly_increasing(x)) throw_input("grid must be strictly increasing");
  const SplineBasis basis = SplineBasis::uniform(x.front(), x.back(), std::min<int>(14, static_cast<int>(x.size())));
  const Eigen::MatrixXd q = penalty_matrix(basis, PenaltyMode::integral);
  return smooth_spline_fit(basis, q, x, y, lambda);
}

double smoother_trace(const SplineBasis& basis, const Eigen::MatrixXd& penalty, std::span<const double> x,
                      double lambda) {
  const std::vector<double> zeros(x.size(), 0.0);
  return solve_smoother(build_system(basis, penalty, x, zeros), lambda).edf;
}

}  // namespace qcspec
