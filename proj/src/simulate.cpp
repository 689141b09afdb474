#include "qcspec/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "qcspec/error.hpp"
#include "qcspec/kernels.hpp"
#include "qcspec/normal.hpp"
#include "qcspec/rng.hpp"

namespace qcspec {

namespace {

constexpr double kD = 0.9;
constexpr double kF0 = 0.2;
constexpr double kA11 = 0.8;
constexpr double kA21 = -0.7;

// Sub-stream ids of a single simulated path.
enum Stream : std::uint64_t { kCase1Noise = 0, kXi1Noise = 1, kXi2Noise = 2, kXi3Noise = 3 };

std::vector<double> normal_draws(std::uint64_t seed, std::uint64_t stream, Eigen::Index count, double sd) {
  std::mt19937_64 gen = make_stream(seed, stream);
  std::normal_distribution<double> dist(0.0, sd);
  std::vector<double> e(static_cast<std::size_t>(count));
  for (auto& v : e) v = dist(gen);
  return e;
}

std::vector<double> ar1_path(std::span<const double> e, double a) {
  std::vector<double> x(e.size());
  double prev = 0.0;
  for (std::size_t t = 0; t < e.size(); ++t) x[t] = prev = a * prev + e[t];
  return x;
}

std::vector<double> ar2_path(std::span<const double> e, double a1, double a2) {
  std::vector<double> x(e.size());
  double x1 = 0.0, x2 = 0.0;
  for (std::size_t t = 0; t < e.size(); ++t) {
    x[t] = a1 * x1 + a2 * x2 + e[t];
    x2 = x1;
    x1 = x[t];
  }
  return x;
}

struct Case2Paths {
  std::vector<double> xi1, xi2, xi3, e3;
};

Case2Paths case2_paths(std::uint64_t seed, Eigen::Index total) {
  const auto [a31, a32] = case1_coefficients();
  Case2Paths p;
  p.xi1 = ar1_path(normal_draws(seed, kXi1Noise, total, std::sqrt(ar1_innovation_variance(kA11))), kA11);
  p.xi2 = ar1_path(normal_draws(seed, kXi2Noise, total, std::sqrt(ar1_innovation_variance(kA21))), kA21);
  p.e3 = normal_draws(seed, kXi3Noise, total, std::sqrt(ar2_innovation_variance(a31, a32)));
  p.xi3 = ar2_path(p.e3, a31, a32);
  return p;
}

}  // namespace

void SimSpec::validate() const {
  if (case_id < 1 || case_id > 3) throw_input("case must be 1, 2 or 3");
  if (n < 64) throw_input("simulated length must be at least 64");
  if (burn_in < 500) throw_input("burn-in must be at least 500");
}

std::array<double, 2> case1_coefficients() {
  return {2.0 * kD * std::cos(2.0 * std::numbers::pi * kF0), -kD * kD};
}

double mix_w1(double x) {
  if (x < -0.8) return 0.9;
  if (x > 0.8) return 0.2;
  return 0.9 - (7.0 / 16.0) * (x + 0.8);
}

double mix_w2(double x) {
  if (x < -0.4) return 0.5;
  if (x > 0.4) return 1.0;
  return 0.5 + (5.0 / 8.0) * (x + 0.4);
}

double ar1_innovation_variance(double a) {
  if (!(std::abs(a) < 1.0)) throw_input("AR(1) coefficient must satisfy |a| < 1");
  return 1.0 - a * a;
}

double ar2_innovation_variance(double a1, double a2) {
  // gamma0 = (1 - a2) s2 / ((1 + a2)((1 - a2)^2 - a1^2)); solve for s2 at gamma0 = 1.
  const double den = (1.0 - a2) * (1.0 - a2) - a1 * a1;
  if (!(std::abs(a2) < 1.0 && den > 0.0)) throw_input("AR(2) coefficients are not stationary");
  return (1.0 + a2) * den / (1.0 - a2);
}

TimeSeries generate(const SimSpec& spec) {
  spec.validate();
  const Eigen::Index total = spec.n + spec.burn_in;
  std::vector<double> y(static_cast<std::size_t>(spec.n));
  const auto b = static_cast<std::size_t>(spec.burn_in);
  switch (spec.case_id) {
    case 1: {
      const auto [a1, a2] = case1_coefficients();
      const std::vector<double> x = ar2_path(normal_draws(spec.seed, kCase1Noise, total, 1.0), a1, a2);
      std::copy(x.begin() + static_cast<std::ptrdiff_t>(b), x.end(), y.begin());
      break;
    }
    case 2: {
      const Case2Paths p = case2_paths(spec.seed, total);
      for (std::size_t t = 0; t < y.size(); ++t) {
        const std::size_t s = t + b;
        const double w1 = mix_w1(p.xi1[s]);
        const double zeta = w1 * p.xi1[s] + (1.0 - w1) * p.xi2[s];
        const double w2 = mix_w2(zeta);
        y[t] = w2 * zeta + (1.0 - w2) * p.xi3[s];
      }
      break;
    }
    default: {
      const Case2Paths p = case2_paths(spec.seed, total);
      for (std::size_t t = 0; t < y.size(); ++t) y[t] = p.e3[t + b] * std::exp(p.xi3[t + b - 1]);
      break;
    }
  }
  return TimeSeries(std::move(y));
}

Eigen::MatrixXd case2_components(const SimSpec& spec) {
  spec.validate();
  const Case2Paths p = case2_paths(spec.seed, spec.n + spec.burn_in);
  Eigen::MatrixXd out(spec.n, 3);
  for (Eigen::Index t = 0; t < spec.n; ++t) {
    const auto s = static_cast<std::size_t>(t + spec.burn_in);
    out(t, 0) = p.xi1[s];
    out(t, 1) = p.xi2[s];
    out(t, 2) = p.xi3[s];
  }
  return out;
}

double ar_spectral_radius(std::span<const double> coeffs) {
  const auto p = static_cast<Eigen::Index>(coeffs.size());
  if (p == 0) return 0.0;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) companion(0, j) = coeffs[j];
  for (Eigen::Index j = 1; j < p; ++j) companion(j, j - 1) = 1.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<double> ar_autocorrelation(std::span<const double> coeffs, int maxlag) {
  if (maxlag < 0) throw_input("maxlag must be nonnegative");
  const auto p = static_cast<int>(coeffs.size());
  if (!(ar_spectral_radius(coeffs) < 1.0)) throw_input("unstable AR");
  std::vector<double> rho(static_cast<std::size_t>(std::max(maxlag, p)) + 1, 0.0);
  rho[0] = 1.0;
  if (p > 0) {
    // rho_k - sum_j a_j rho_{|k-j|} = 0 for k = 1..p, unknowns rho_1..rho_p.
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p);
    Eigen::VectorXd rhs(p);
    for (int k = 1; k <= p; ++k) {
      rhs[k - 1] = 0.0;
      for (int j = 1; j <= p; ++j) {
        const int lag = std::abs(k - j);
        if (lag == 0)
          rhs[k - 1] += coeffs[j - 1];
        else
          m(k - 1, lag - 1) -= coeffs[j - 1];
      }
    }
    const Eigen::VectorXd sol = m.partialPivLu().solve(rhs);
    for (int k = 1; k <= p; ++k) rho[k] = sol[k - 1];
  }
  for (std::size_t k = static_cast<std::size_t>(p) + 1; k < rho.size(); ++k) {
    double acc = 0.0;
    for (int j = 1; j <= p; ++j) acc += coeffs[j - 1] * rho[k - j];
    rho[k] = acc;
  }
  rho.resize(static_cast<std::size_t>(maxlag) + 1);
  return rho;
}

namespace {

// |Phi2(z,z;rho) - alpha^2| <= |rho| / (2 pi sqrt(1 - rho^2)).
double crossing_envelope(double rho) {
  return std::abs(rho) / (2.0 * std::numbers::pi * std::sqrt(1.0 - rho * rho));
}

double gaussian_tail_bound(std::span<const double> coeffs, const std::vector<double>& rho) {
  const auto p = static_cast<int>(coeffs.size());
  if (p == 0) return 0.0;
  std::vector<double> window(rho.end() - p, rho.end());
  double sum = 0.0;
  const double radius = ar_spectral_radius(coeffs);
  for (int step = 0; step < 1'000'000; ++step) {
    double next = 0.0;
    for (int j = 1; j <= p; ++j) next += coeffs[j - 1] * window[p - j];
    window.erase(window.begin());
    window.push_back(next);
    sum += 2.0 * crossing_envelope(next);
    double biggest = 0.0;
    for (double v : window) biggest = std::max(biggest, std::abs(v));
    if (biggest < 1e-300) break;
    // Geometric remainder once the recursion has decayed well below the sum.
    if (radius > 0.0 && radius < 1.0 && biggest * 1e6 < sum * (1.0 - radius)) {
      sum += 2.0 * biggest * p / ((1.0 - radius) * 2.0 * std::numbers::pi);
      break;
    }
  }
  return sum;
}

Eigen::MatrixXd crossing_acf_from_rho(const std::vector<double>& rho, const QuantileGrid& alphas) {
  const auto levels = static_cast<Eigen::Index>(alphas.size());
  const auto lags = static_cast<Eigen::Index>(rho.size());
  Eigen::MatrixXd r(lags, levels);
  for (Eigen::Index l = 0; l < levels; ++l) {
    const double a = alphas[l];
    const double z = normal_quantile(a);
    r(0, l) = a * (1.0 - a);
    for (Eigen::Index tau = 1; tau < lags; ++tau) r(tau, l) = bvn_cdf(z, z, rho[tau]) - a * a;
  }
  return r;
}

}  // namespace

Eigen::MatrixXd gaussian_crossing_acf(std::span<const double> coeffs, const QuantileGrid& alphas, int maxlag) {
  return crossing_acf_from_rho(ar_autocorrelation(coeffs, maxlag), alphas);
}

TruthGrid truth_gaussian(std::span<const double> coeffs, const QuantileGrid& alphas, int maxlag,
                         std::span<const double> freqs) {
  const auto p = static_cast<int>(coeffs.size());
  if (maxlag < p) throw_input("truth maxlag must be at least the AR order");
  const std::vector<double> rho = ar_autocorrelation(coeffs, maxlag);
  for (int tau = std::max(1, maxlag - p + 1); tau <= maxlag && p > 0; ++tau)
    if (!(std::abs(rho[tau]) < 1e-8)) throw_input("truth maxlag too small: |rho(maxlag)| >= 1e-8");

  const auto levels = static_cast<Eigen::Index>(alphas.size());
  const Eigen::MatrixXd r = crossing_acf_from_rho(rho, alphas);

  const auto nf = static_cast<Eigen::Index>(freqs.size());
  Eigen::MatrixXd s(nf, levels);
#pragma omp parallel for schedule(static) if (nf * levels * maxlag > (1 << 16))
  for (Eigen::Index k = 0; k < nf; ++k) {
    for (Eigen::Index l = 0; l < levels; ++l) {
      double acc = 0.0;
      for (int tau = maxlag; tau >= 1; --tau) acc += r(tau, l) * std::cos(freqs[k] * tau);
      s(k, l) = r(0, l) + 2.0 * acc;
    }
  }

  TruthGrid truth;
  truth.grid.freqs.assign(freqs.begin(), freqs.end());
  truth.grid.alphas = alphas;
  truth.grid.s = std::move(s);
  truth.grid.set_meta("estimator", "truth");
  truth.grid.set_meta("maxlag", std::to_string(maxlag));
  truth.provenance = TruthProvenance::semi_analytic;
  truth.truncation_bound = gaussian_tail_bound(coeffs, rho);
  return truth;
}

std::vector<double> population_quantiles(int case_id, const QuantileGrid& alphas, std::uint64_t seed,
                                         Eigen::Index draws) {
  const SimSpec spec{case_id, draws, derive_seed(seed, 0x5155414E54494C45ULL), 1000};
  const TimeSeries y = generate(spec);
  std::vector<double> sorted(y.values().begin(), y.values().end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> q(alphas.size());
  for (std::size_t l = 0; l < alphas.size(); ++l) q[l] = sorted[quantile_rank(sorted.size(), alphas[l]) - 1];
  return q;
}

TruthGrid truth_mc(const SimSpec& spec, const QuantileGrid& alphas, int maxlag, std::span<const double> freqs,
                   const McTruthOptions& options) {
  if (options.n_long < (Eigen::Index{1} << 17)) throw_input("truth_mc needs n_long >= 2^17");
  if (options.reps < 8) throw_input("truth_mc needs reps >= 8");
  if (maxlag < 1 || maxlag >= options.n_long) throw_input("truth_mc bandwidth out of range");
  const std::vector<double> q = population_quantiles(spec.case_id, alphas, spec.seed, options.quantile_draws);

  const auto nf = static_cast<Eigen::Index>(freqs.size());
  const auto levels = static_cast<Eigen::Index>(alphas.size());
  Eigen::MatrixXd s_sum = Eigen::MatrixXd::Zero(nf, levels);
  Eigen::MatrixXd s_sq = Eigen::MatrixXd::Zero(nf, levels);
  Eigen::MatrixXd r_sum = Eigen::MatrixXd::Zero(maxlag + 1, levels);
  Eigen::MatrixXd r_sq = Eigen::MatrixXd::Zero(maxlag + 1, levels);
  for (int rep = 0; rep < options.reps; ++rep) {
    SimSpec rs = spec;
    rs.n = options.n_long;
    rs.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(rep) + 1);
    const QcsMatrix qcs = qcser_at(generate(rs), alphas, q);
    const Eigen::MatrixXd r = kernels::acf_fft(qcs.u, maxlag);
    const Eigen::MatrixXd s = kernels::lag_window_sum(r, maxlag, freqs);
    r_sum += r;
    r_sq += r.cwiseProduct(r);
    s_sum += s;
    s_sq += s.cwiseProduct(s);
  }
  const double reps = options.reps;
  const auto standard_error = [reps](const Eigen::MatrixXd& sum, const Eigen::MatrixXd& sq) {
    const Eigen::MatrixXd mean = sum / reps;
    const Eigen::MatrixXd var = ((sq - reps * mean.cwiseProduct(mean)) / (reps - 1.0)).cwiseMax(0.0);
    return Eigen::MatrixXd((var / reps).cwiseSqrt());
  };

  TruthGrid truth;
  truth.grid.freqs.assign(freqs.begin(), freqs.end());
  truth.grid.alphas = alphas;
  truth.grid.s = s_sum / reps;
  truth.grid.set_meta("estimator", "truth");
  truth.grid.set_meta("case", std::to_string(spec.case_id));
  truth.grid.set_meta("M", std::to_string(maxlag));
  truth.grid.set_meta("reps", std::to_string(options.reps));
  truth.grid.set_meta("n_long", std::to_string(options.n_long));
  truth.provenance = TruthProvenance::monte_carlo;
  truth.se = standard_error(s_sum, s_sq);
  truth.acf = r_sum / reps;
  truth.acf_se = standard_error(r_sum, r_sq);
  return truth;
}

TruthGrid default_truth(int case_id, Eigen::Index n, const QuantileGrid& alphas, std::uint64_t seed,
                        const McTruthOptions& options) {
  const std::vector<double> freqs = fourier_frequencies(n);
  TruthGrid truth;
  if (case_id == 1) {
    const auto a = case1_coefficients();
    truth = truth_gaussian(a, alphas, kTruthMaxlag, freqs);
  } else {
    const SimSpec spec{case_id, n < 64 ? 64 : n, seed, 1000};
    truth = truth_mc(spec, alphas, kTruthBandwidth, freqs, options);
  }
  truth.grid.n = n;
  truth.grid.set_meta("case", std::to_string(case_id));
  return truth;
}

}  // namespace qcspec
