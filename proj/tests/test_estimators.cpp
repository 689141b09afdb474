#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qcspec/error.hpp"
#include "qcspec/estimators.hpp"
#include "qcspec/evaluate.hpp"
#include "qcspec/kernels.hpp"
#include "qcspec/reference.hpp"
#include "qcspec/simulate.hpp"
#include "support.hpp"

using namespace qcspec;
using namespace qcspec::testing;

namespace {

QcsMatrix case1_qcs(Eigen::Index n, std::uint64_t seed, const QuantileGrid& g = QuantileGrid::standard()) {
  return qcser(generate(SimSpec{1, n, seed, 1000}), g);
}

// QcsMatrix holding arbitrary columns.
QcsMatrix raw_columns(const Eigen::MatrixXd& u, const QuantileGrid& g) {
  QcsMatrix q;
  q.u = u;
  q.alphas = g;
  q.qhat.assign(g.size(), 0.0);
  return q;
}

QAcf acf_of(const std::vector<double>& r, Eigen::Index n = 1000) {
  QAcf a;
  a.r = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  a.maxlag = static_cast<int>(r.size()) - 1;
  a.n = n;
  a.alphas = QuantileGrid({0.5});
  return a;
}

// Dense oracle for the lagged design of one column.
Eigen::MatrixXd lag_matrix(const Eigen::VectorXd& u, int p) {
  const Eigen::Index n = u.size();
  Eigen::MatrixXd x(n - p, p);
  for (Eigen::Index t = p; t < n; ++t)
    for (int j = 1; j <= p; ++j) x(t - p, j - 1) = u[t - j];
  return x;
}

std::vector<double> dense_frequencies(int m) {
  std::vector<double> w(m);
  for (int k = 0; k < m; ++k) w[k] = 2.0 * std::numbers::pi * k / m;
  return w;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lag-window estimator

TEST_CASE("Tukey-Hanning window values") {
  CHECK(kernels::tukey_hanning(0.0) == 1.0);
  CHECK(std::abs(kernels::tukey_hanning(1.0)) < 1e-16);
  CHECK(kernels::tukey_hanning(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(kernels::tukey_hanning(-0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(kernels::tukey_hanning(1.5) == 0.0);
}

TEST_CASE("lag-window estimate of a delta autocovariance is flat") {
  QAcf a;
  a.r = Eigen::MatrixXd::Zero(21, 2);
  a.r(0, 0) = 0.21;
  a.r(0, 1) = 0.09;
  a.maxlag = 20;
  a.n = 128;
  a.alphas = QuantileGrid({0.3, 0.9});
  const SpectrumGrid g = spec_lw(a, 20);
  CHECK(g.freqs.size() == 63);
  CHECK((g.s.col(0).array() - 0.21).abs().maxCoeff() < 1e-15);
  CHECK((g.s.col(1).array() - 0.09).abs().maxCoeff() < 1e-15);
  const SpectrumGrid gn = spec_lw(a, 20, true);
  CHECK((gn.s.array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("lag-window estimate matches a direct double sum") {
  const QuantileGrid g({0.2, 0.5, 0.8});
  const QAcf a = qacf(qcser(TimeSeries(gaussian_ar1(300, 0.7, 2)), g), 16);
  const SpectrumGrid s = spec_lw(a, 16);
  for (std::size_t k = 0; k < s.freqs.size(); ++k)
    for (int l = 0; l < 3; ++l) {
      double acc = 0.0;
      for (int tau = -16; tau <= 16; ++tau) {
        const double x = tau / 16.0;
        const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * x));
        acc += w * a.r(std::abs(tau), l) * std::cos(s.freqs[k] * tau);
      }
      CHECK(std::abs(s.s(k, l) - acc) < 1e-10);
    }
}

TEST_CASE("lag-window errors") {
  const QAcf a = qacf(qcser(TimeSeries(white_noise(100, 1)), QuantileGrid({0.5})), 10);
  CHECK_THROWS_AS(spec_lw(a, 11), Error);
  CHECK_THROWS_AS(spec_lw(a, 0), Error);
}

// ---------------------------------------------------------------------------
// Least squares and Yule-Walker

TEST_CASE("least squares recovers an AR(1) column") {
  const std::vector<double> u = gaussian_ar1(4096, 0.5, 10);
  const Eigen::Map<const Eigen::VectorXd> col(u.data(), 4096);
  const ArFit fit = ar_fit_ls(raw_columns(col, QuantileGrid({0.5})), 1);
  CHECK(std::abs(fit.coeffs(0, 0) - 0.5) < 0.05);
}

TEST_CASE("least squares on crossing data of an AR(1) approaches the crossing autocorrelation") {
  const QuantileGrid g({0.3, 0.5});
  const std::array<double, 1> c{0.5};
  const Eigen::MatrixXd r = gaussian_crossing_acf(c, g, 1);
  const ArFit fit = ar_fit_ls(qcser(TimeSeries(gaussian_ar1(4096, 0.5, 11)), g), 1);
  for (int l = 0; l < 2; ++l) CHECK(std::abs(fit.coeffs(0, l) - r(1, l) / r(0, l)) < 0.05);
}

TEST_CASE("one-regressor least squares closed form") {
  const QcsMatrix q = case1_qcs(256, 3, QuantileGrid({0.1, 0.5, 0.77}));
  const ArFit fit = ar_fit_ls(q, 1);
  for (int l = 0; l < 3; ++l) {
    double num = 0, den = 0, rss = 0;
    for (Eigen::Index t = 1; t < q.n(); ++t) {
      num += q.u(t, l) * q.u(t - 1, l);
      den += q.u(t - 1, l) * q.u(t - 1, l);
    }
    const double a = num / den;
    for (Eigen::Index t = 1; t < q.n(); ++t) rss += std::pow(q.u(t, l) - a * q.u(t - 1, l), 2);
    CHECK(std::abs(fit.coeffs(0, l) - a) < 1e-12);
    CHECK(fit.sigma2[l] == doctest::Approx(rss / (q.n() - 1)).epsilon(1e-12));
  }
}

TEST_CASE("least squares matches a dense QR oracle at p = 5") {
  const QcsMatrix q = case1_qcs(300, 4, QuantileGrid({0.25, 0.6}));
  const ArFit fit = ar_fit_ls(q, 5);
  for (int l = 0; l < 2; ++l) {
    const Eigen::VectorXd u = q.u.col(l);
    const Eigen::MatrixXd x = lag_matrix(u, 5);
    const Eigen::VectorXd y = u.tail(u.size() - 5);
    const Eigen::VectorXd a = x.colPivHouseholderQr().solve(y);
    CHECK((fit.coeffs.col(l) - a).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(fit.sigma2[l] >= 0.0);
  }
}

TEST_CASE("white-noise crossing coefficients stay inside the null band") {
  const Eigen::Index n = 4096;
  const ArFit fit = ar_fit_ls(qcser(TimeSeries(white_noise(n, 12)), QuantileGrid({0.25, 0.5, 0.75})), 2);
  CHECK(fit.coeffs.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("least-squares order bound") {
  const QcsMatrix q = case1_qcs(64, 1, QuantileGrid({0.5}));
  CHECK_THROWS_AS(ar_fit_ls(q, 32), Error);
  CHECK_NOTHROW(ar_fit_ls(q, 31));
  CHECK_THROWS_AS(ar_fit_ls(q, -1), Error);
}

TEST_CASE("Yule-Walker closed form for p = 1") {
  const ArFit fit = ar_fit_yw(acf_of({1.0, 0.5}), 1);
  CHECK(fit.coeffs(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fit.sigma2[0] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("Yule-Walker rejects a non-positive-definite sequence") {
  CHECK_THROWS_WITH_AS(ar_fit_yw(acf_of({1.0, 1.0}), 1), "nonpositive-definite ACF", Error);
  CHECK_THROWS_WITH_AS(ar_fit_yw(acf_of({1.0, 0.9, -0.9}), 2), "nonpositive-definite ACF", Error);
  CHECK_THROWS_AS(ar_fit_yw(acf_of({1.0, 0.5}), 2), Error);
}

TEST_CASE("Levinson-Durbin agrees with a dense Toeplitz solve up to p = 16") {
  const QuantileGrid g({0.1, 0.5, 0.85});
  const QAcf acf = qacf(case1_qcs(1024, 5, g), 16);
  for (int p = 1; p <= 16; ++p) {
    const ArFit fit = ar_fit_yw(acf, p);
    for (int l = 0; l < 3; ++l) {
      Eigen::MatrixXd gam(p, p);
      Eigen::VectorXd rhs(p);
      for (int i = 0; i < p; ++i) {
        rhs[i] = acf.r(i + 1, l);
        for (int j = 0; j < p; ++j) gam(i, j) = acf.r(std::abs(i - j), l);
      }
      const Eigen::VectorXd a = gam.ldlt().solve(rhs);
      CHECK((fit.coeffs.col(l) - a).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(fit.sigma2[l] == doctest::Approx(acf.r(0, l) - a.dot(rhs)).epsilon(1e-10));
      CHECK(fit.reflection.col(l).cwiseAbs().maxCoeff() < 1.0);
      CHECK(fit.sigma2[l] > 0.0);
    }
  }
}

TEST_CASE("Yule-Walker recovers AR(2) coefficients from the exact autocorrelation") {
  const double a1 = 0.556, a2 = -0.81;
  std::vector<double> rho(3);
  rho[0] = 1.0;
  rho[1] = a1 / (1.0 - a2);
  rho[2] = a1 * rho[1] + a2;
  const ArFit fit = ar_fit_yw(acf_of(rho), 2);
  CHECK(std::abs(fit.coeffs(0, 0) - a1) < 1e-9);
  CHECK(std::abs(fit.coeffs(1, 0) - a2) < 1e-9);
  // Stability of the fit: roots of 1 - a1 z - a2 z^2 outside the unit circle.
  const std::array<double, 2> c{fit.coeffs(0, 0), fit.coeffs(1, 0)};
  CHECK(ar_spectral_radius(c) < 1.0);
}

// ---------------------------------------------------------------------------
// Order selection

TEST_CASE("argmin ties go to the smallest index") {
  const std::vector<double> v{3.0, 1.0, 1.0, 2.0};
  CHECK(argmin_first(v) == 1);
  const std::vector<double> flat(5, 0.25);
  CHECK(argmin_first(flat) == 0);
}

TEST_CASE("AIC table uses the common window and picks the averaged minimizer") {
  const QuantileGrid g({0.2, 0.5, 0.8});
  const QcsMatrix q = case1_qcs(256, 9, g);
  const int pmax = 6;
  const AicTable t = aic_table(q, pmax);
  const Eigen::Index neff = q.n() - pmax;
  for (int l = 0; l < 3; ++l) {
    const Eigen::VectorXd u = q.u.col(l);
    const Eigen::VectorXd y = u.tail(neff);
    CHECK(t.aic(0, l) == doctest::Approx(neff * std::log(y.squaredNorm() / neff)).epsilon(1e-12));
    for (int p = 1; p <= pmax; ++p) {
      const Eigen::MatrixXd x = lag_matrix(u, pmax).leftCols(p);
      const Eigen::VectorXd a = x.colPivHouseholderQr().solve(y);
      const double s2 = (y - x * a).squaredNorm() / neff;
      CHECK(t.aic(p, l) == doctest::Approx(neff * std::log(s2) + 2.0 * p).epsilon(1e-10));
    }
  }
  CHECK(t.mean_aic[0] == doctest::Approx(t.aic.row(0).mean()).epsilon(1e-15));
  CHECK(static_cast<std::size_t>(t.best) == argmin_first({t.mean_aic.data(), static_cast<std::size_t>(pmax + 1)}));
  CHECK(select_order_aic(q, pmax) == t.best);
  CHECK_THROWS_AS(aic_table(q, 64), Error);
}

TEST_CASE("AIC on case-1 data selects the population AIC order") {
  // Population oracle: Yule-Walker innovation variances of the exact crossing
  // autocovariances give the large-sample AIC profile on the common window.
  const QuantileGrid g = QuantileGrid::standard();
  const int pmax = 20;
  const Eigen::Index n = 512;
  QAcf pop;
  pop.r = gaussian_crossing_acf(case1_coefficients(), g, pmax);
  pop.maxlag = pmax;
  pop.n = n;
  pop.alphas = g;
  std::vector<double> profile(pmax + 1);
  for (int p = 0; p <= pmax; ++p) {
    const ArFit f = ar_fit_yw(pop, p);
    profile[p] = (n - pmax) * f.sigma2.array().log().mean() + 2.0 * p;
  }
  const int pstar = static_cast<int>(argmin_first(profile));
  MESSAGE("population AIC order " << pstar);
  CHECK(pstar >= 2);
  int hits = 0, small = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const int p = select_order_aic(case1_qcs(n, 5000 + r), pmax);
    hits += p == pstar;
    small += p >= 2 && p <= 4;
  }
  MESSAGE("selected the population order in " << hits << " of 100 runs; p in {2,3,4} in " << small);
  CHECK(hits >= 80);
}

TEST_CASE("AIC selects p = 0 for white noise in most replications") {
  int zero = 0;
  for (std::uint64_t r = 0; r < 100; ++r)
    zero += select_order_aic(qcser(TimeSeries(white_noise(512, 700 + r)), QuantileGrid::standard()), 20) == 0;
  CHECK(zero > 50);
}

// ---------------------------------------------------------------------------
// AR spectra

TEST_CASE("order-zero AR spectrum is flat at the residual variance") {
  const QcsMatrix q = case1_qcs(256, 2, QuantileGrid({0.3, 0.6}));
  ArOptions o;
  o.p = 0;
  const SpectrumGrid s = spec_ar(q, o);
  const ArFit fit = ar_fit_ls(q, 0);
  for (int l = 0; l < 2; ++l) CHECK((s.s.col(l).array() - fit.sigma2[l]).abs().maxCoeff() < 1e-15);
}

TEST_CASE("normalized white-noise AR spectrum is identically one") {
  ArFit fit;
  fit.p = 0;
  fit.alphas = QuantileGrid::standard();
  fit.coeffs.resize(0, 91);
  fit.sigma2.resize(91);
  for (int l = 0; l < 91; ++l) fit.sigma2[l] = fit.alphas[l] * (1 - fit.alphas[l]);
  const SpectrumGrid s = eval_spectrum(fit, fourier_frequencies(256), true);
  CHECK((s.s.array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("Yule-Walker spectrum integrates to the lag-zero autocovariance") {
  const QuantileGrid g({0.1, 0.5, 0.9});
  const QcsMatrix q = case1_qcs(512, 8, g);
  for (int p : {2, 6}) {
    const ArFit fit = ar_fit_yw(qacf(q, p), p);
    const SpectrumGrid s = eval_spectrum(fit, dense_frequencies(4096));
    const QAcf r = qacf(q, 0);
    for (int l = 0; l < 3; ++l) CHECK(std::abs(s.s.col(l).mean() / r.r(0, l) - 1.0) < 0.005);
  }
}

TEST_CASE("case-1 AR spectrum at the median peaks near f0") {
  const Eigen::Index n = 512;
  const QuantileGrid g = QuantileGrid::standard();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero((n - 1) / 2);
  int hits = 0;
  const int runs = 20;
  std::vector<double> freqs;
  for (int r = 0; r < runs; ++r) {
    const SpectrumGrid s = spec_ar(case1_qcs(n, r, g));
    CHECK(s.s.minCoeff() > 0.0);
    mean += s.s.col(45) / runs;
    Eigen::Index k;
    s.s.col(45).maxCoeff(&k);
    hits += std::abs(s.freqs[k] * n / (2.0 * std::numbers::pi) - 0.2 * n) <= 2.0;
    freqs = s.freqs;
  }
  Eigen::Index k;
  mean.maxCoeff(&k);
  MESSAGE("single-run peaks within 2 bins: " << hits << " of " << runs);
  CHECK(std::abs(freqs[k] * n / (2.0 * std::numbers::pi) - 0.2 * n) <= 2.0);
}

TEST_CASE("Horner evaluation matches the naive exponential sum at p = 12") {
  const QcsMatrix q = case1_qcs(1024, 6, QuantileGrid({0.2, 0.5, 0.7}));
  const ArFit fit = ar_fit_yw(qacf(q, 12), 12);
  const std::vector<double> w = dense_frequencies(1000);
  const Eigen::MatrixXd a = kernels::ar_spectrum(fit.coeffs, fit.sigma2, w);
  const Eigen::MatrixXd b = reference::ar_spectrum_naive(fit.coeffs, fit.sigma2, w);
  CHECK(((a - b).array().abs() / b.array()).maxCoeff() < 1e-12);
}

TEST_CASE("unit-root coefficients are rejected") {
  Eigen::MatrixXd c(1, 1);
  c(0, 0) = 1.0;
  Eigen::VectorXd s2(1);
  s2[0] = 1.0;
  const std::vector<double> w{0.0, 1.0};
  CHECK_THROWS_WITH_AS(kernels::ar_spectrum(c, s2, w), "near-unit-root spectrum", Error);
}

// ---------------------------------------------------------------------------
// AR-S

TEST_CASE("AR-S leaves sequences that are already linear in alpha unchanged") {
  ArFit fit;
  fit.p = 2;
  fit.alphas = QuantileGrid::standard();
  fit.coeffs.resize(2, 91);
  fit.sigma2.resize(91);
  for (int l = 0; l < 91; ++l) {
    const double a = fit.alphas[l];
    fit.coeffs(0, l) = 0.4 + 0.2 * a;
    fit.coeffs(1, l) = -0.3 + 0.1 * a;
    fit.sigma2[l] = 0.1 + 0.05 * a;
  }
  const ArsModel m = smooth_ar_fit(fit);
  const std::vector<double> w = fourier_frequencies(256);
  const SpectrumGrid ar = eval_spectrum(fit, w);
  const SpectrumGrid ars = eval_spectrum(m, w, fit.alphas);
  CHECK((ar.s - ars.s).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("AR-S smoothing matches an independent GCV fit per sequence") {
  const QcsMatrix q = case1_qcs(256, 4);
  ArsOptions o;
  o.p = 2;
  const ArsModel m = ars_fit(q, o);
  const ArFit fit = ar_fit_ls(q, 2);
  const SplineBasis b = SplineBasis::for_levels(q.alphas, 14);
  const Eigen::MatrixXd pen = penalty_matrix(b, PenaltyMode::integral);
  for (int j = 0; j < 2; ++j) {
    const std::vector<double> y(fit.coeffs.row(j).begin(), fit.coeffs.row(j).end());
    const SmoothFit s = smooth_spline_fit(b, pen, q.alphas.levels(), y, std::nullopt);
    CHECK(s.coeffs == m.coeff_fits[j].coeffs);
  }
  for (int l = 0; l < 91; ++l) CHECK(m.sigma2_at(q.alphas[l]) >= 1e-6 * q.alphas[l] * (1 - q.alphas[l]));
}

TEST_CASE("AR-S needs at least four levels") {
  const QcsMatrix q = case1_qcs(256, 4, QuantileGrid({0.25, 0.5, 0.75}));
  CHECK_THROWS_WITH_AS(spec_ars(q), "insufficient quantile levels", Error);
}

TEST_CASE("AR-S beats AR on case-2 data in most replications") {
  MonteCarloSetup setup;
  setup.case_id = 2;
  setup.n = 512;
  setup.runs = 100;
  setup.seed = 424242;
  const TruthGrid truth = default_truth(2, 512, setup.alphas, 77);
  const std::vector<EstimatorConfig> est{{.kind = EstimatorKind::ar}, {.kind = EstimatorKind::ars}};
  const std::vector<EvalReport> rep = run_monte_carlo(setup, est, truth);
  int wins = 0, both = 0;
  for (int r = 0; r < 100; ++r) {
    if (!rep[0].records[r].ok || !rep[1].records[r].ok) continue;
    ++both;
    wins += rep[1].records[r].kld < rep[0].records[r].kld;
  }
  MESSAGE("AR-S wins " << wins << " of " << both);
  CHECK(2 * wins > both);
}

// ---------------------------------------------------------------------------
// SAR

TEST_CASE("SAR with lambda near zero and an interpolating basis reproduces per-level least squares") {
  const QuantileGrid g = QuantileGrid::uniform(0.1, 0.9, 0.1);
  const QcsMatrix q = case1_qcs(512, 13, g);
  const SplineBasis b = SplineBasis::for_levels(g, 9);
  REQUIRE(b.size() == 9);
  const ArFit ls = ar_fit_ls(q, 2);
  for (double lam : {0.0, 1e-14}) {
    SarOptions o;
    o.p = 2;
    o.lambda = lam;
    const SarModel m = sar_fit(q, b, o);
    double dev = 0.0;
    for (int l = 0; l < 9; ++l) dev = std::max(dev, (m.coefficients_at(g[l]) - ls.coeffs.col(l)).cwiseAbs().maxCoeff());
    CHECK_MESSAGE(dev < 1e-6, "lambda=" << lam << " dev=" << dev);
  }
}

TEST_CASE("SAR with a single level reduces to single-level least squares") {
  const QuantileGrid g({0.4});
  const QcsMatrix q = case1_qcs(256, 3, g);
  const SplineBasis b = SplineBasis::for_levels(g);
  REQUIRE(b.size() == 1);
  SarOptions o;
  o.p = 3;
  o.lambda = 0.0;
  const SarModel m = sar_fit(q, b, o);
  CHECK((m.coefficients_at(0.4) - ar_fit_ls(q, 3).coeffs.col(0)).cwiseAbs().maxCoeff() < 1e-8);
  o.lambda = std::nullopt;
  CHECK((sar_fit(q, b, o).coefficients_at(0.4) - ar_fit_ls(q, 3).coeffs.col(0)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("SAR with a huge lambda collapses each coefficient to a line") {
  const QuantileGrid g = QuantileGrid::standard();
  const QcsMatrix q = case1_qcs(512, 14, g);
  const SplineBasis b = SplineBasis::for_levels(g);
  SarOptions o;
  o.p = 2;
  o.lambda = 1e9;
  const SarModel m = sar_fit(q, b, o);
  double worst = 0.0;
  for (int l = 1; l + 1 < 91; ++l) {
    const Eigen::VectorXd d2 = m.coefficients_at(g[l - 1]) - 2.0 * m.coefficients_at(g[l]) + m.coefficients_at(g[l + 1]);
    worst = std::max(worst, d2.cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("SAR hat-matrix trace limits") {
  const QuantileGrid g = QuantileGrid::standard();
  const QcsMatrix q = case1_qcs(512, 15, g);
  const SplineBasis b = SplineBasis::for_levels(g);
  for (int p : {1, 2, 4}) {
    CHECK(sar_trace_hat(q, b, p, 0.0) == doctest::Approx(14.0 * p).epsilon(1e-6 / (14.0 * p)));
    CHECK(std::abs(sar_trace_hat(q, b, p, 1e9) - 2.0 * p) < 0.1);
    double prev = 14.0 * p + 1e-9;
    for (int e = -9; e <= 3; ++e) {
      const double tr = sar_trace_hat(q, b, p, std::pow(10.0, e));
      CHECK(tr <= prev + 1e-9);
      CHECK(tr > 0.0);
      prev = tr;
    }
  }
}

namespace {

// Explicit stacked design, rows ordered by level then time.
Eigen::MatrixXd stacked_design(const QcsMatrix& q, const SplineBasis& b, int p) {
  const Eigen::Index rows = q.n() - p;
  const int k = b.size();
  Eigen::MatrixXd x(rows * q.levels(), k * p);
  for (Eigen::Index l = 0; l < q.levels(); ++l) {
    const Eigen::VectorXd phi = b.eval(q.alphas[l]);
    for (Eigen::Index t = 0; t < rows; ++t)
      for (int j = 0; j < p; ++j) x.block(l * rows + t, j * k, 1, k) = q.u(t + p - 1 - j, l) * phi.transpose();
  }
  return x;
}

Eigen::VectorXd stacked_response(const QcsMatrix& q, int p) {
  const Eigen::Index rows = q.n() - p;
  Eigen::VectorXd y(rows * q.levels());
  for (Eigen::Index l = 0; l < q.levels(); ++l) y.segment(l * rows, rows) = q.u.col(l).tail(rows);
  return y;
}

Eigen::MatrixXd block_penalty(const Eigen::MatrixXd& pen, int p) {
  const Eigen::Index k = pen.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k * p, k * p);
  for (int j = 0; j < p; ++j) out.block(j * k, j * k, k, k) = pen;
  return out;
}

}  // namespace

TEST_CASE("SAR cyclic-trace value matches the explicit hat matrix") {
  const QuantileGrid g({0.1, 0.3, 0.5, 0.7, 0.9});
  const QcsMatrix q = case1_qcs(64, 16, g);
  const SplineBasis b = SplineBasis::uniform(0.1, 0.9, 6);
  const int p = 2;
  const double lam = 0.01;
  const Eigen::MatrixXd x = stacked_design(q, b, p);
  const Eigen::MatrixXd pen = block_penalty(sar_penalty(b, g, PenaltyMode::grid_sum), p);
  const Eigen::MatrixXd gm = x.transpose() * x + (q.n() - p) * lam * pen;
  const Eigen::MatrixXd h = x * gm.inverse() * x.transpose();
  CHECK(std::abs(sar_trace_hat(q, b, p, lam) - h.trace()) < 1e-8);
  const Eigen::VectorXd theta = gm.ldlt().solve(x.transpose() * stacked_response(q, p));
  CHECK((sar_solve(q, b, p, lam) - theta).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("SAR GCV on a micro instance matches an explicit recomputation") {
  const QuantileGrid g({0.25, 0.5, 0.75});
  const std::vector<double> y{0.3, -1.2, 0.8, 2.1, -0.4, 0.05, 1.7, -2.2, 0.9, 0.1, -0.6, 1.3, -1.1, 0.4, 2.4, -0.2};
  const QcsMatrix q = qcser(TimeSeries(y), g);
  const SplineBasis b = SplineBasis::uniform(0.25, 0.75, 4);
  const int p = 1;
  for (double lam : {1e-3, 0.1, 5.0}) {
    const Eigen::MatrixXd x = stacked_design(q, b, p);
    const Eigen::VectorXd u = stacked_response(q, p);
    const Eigen::MatrixXd pen = block_penalty(sar_penalty(b, g, PenaltyMode::grid_sum), p);
    const Eigen::MatrixXd gm = x.transpose() * x + 15.0 * lam * pen;
    const Eigen::VectorXd theta = gm.inverse() * x.transpose() * u;
    const double rss = (u - x * theta).squaredNorm();
    const double tr = (x * gm.inverse() * x.transpose()).trace();
    const double big_n = 3.0 * 15.0;
    const double expect = (rss / big_n) / std::pow(1.0 - tr / big_n, 2);
    const double got = sar_gcv(q, b, p, lam);
    CHECK(std::abs(got - expect) < 1e-10);
    CHECK(got > 0.0);
  }
}

TEST_CASE("SAR residual sum of squares is nondecreasing in lambda") {
  const QuantileGrid g = QuantileGrid::standard();
  const QcsMatrix q = case1_qcs(256, 17, g);
  const SplineBasis b = SplineBasis::for_levels(g);
  const SarSystem sys(q, b, 2, sar_penalty(b, g, PenaltyMode::grid_sum));
  double prev = 0.0;
  for (int e = -6; e <= 3; ++e) {
    const double rss = sys.solve(std::pow(10.0, e)).rss;
    CHECK(rss >= prev * (1 - 1e-12));
    prev = rss;
  }
}

TEST_CASE("GCV-selected lambda is a local minimum") {
  const QuantileGrid g = QuantileGrid::standard();
  for (std::uint64_t seed : {18u, 19u}) {
    const QcsMatrix q = case1_qcs(256, seed, g);
    const SplineBasis b = SplineBasis::for_levels(g);
    SarOptions o;
    o.p = 2;
    const SarModel m = sar_fit(q, b, o);
    const SarSystem sys(q, b, 2, sar_penalty(b, g, PenaltyMode::grid_sum));
    CHECK(m.gcv_value == doctest::Approx(sys.gcv(m.lambda)).epsilon(1e-12));
    CHECK(m.edf > 0.0);
    CHECK(m.edf <= 14.0 * 2);
    const bool interior = m.lambda > 1e-9 * 1.2 && m.lambda < 1e3 / 1.2;
    if (interior) {
      CHECK(m.gcv_value <= sys.gcv(m.lambda * std::exp(0.1)) * (1 + 1e-12));
      CHECK(m.gcv_value <= sys.gcv(m.lambda * std::exp(-0.1)) * (1 + 1e-12));
    }
  }
}

TEST_CASE("SAR parameter cap and singular systems") {
  const QuantileGrid g({0.25, 0.5, 0.75});
  const QcsMatrix q = qcser(TimeSeries({0.3, -1.2, 0.8, 2.1, -0.4, 0.05, 1.7, -2.2, 0.9}), g);
  const SplineBasis b = SplineBasis::uniform(0.25, 0.75, 4);
  CHECK_THROWS_AS(SarSystem(q, b, 2, sar_penalty(b, g, PenaltyMode::grid_sum), 5), Error);
  // Four basis functions over three levels leave the unpenalized system singular.
  const SarSystem sys(q, b, 1, sar_penalty(b, g, PenaltyMode::grid_sum));
  CHECK_THROWS_WITH_AS(sys.solve(0.0), "singular system; increase lambda", Error);
  CHECK_NOTHROW(sys.solve(0.1));
}

TEST_CASE("SAR fit is deterministic") {
  const QuantileGrid g = QuantileGrid::standard();
  const TimeSeries y = generate(SimSpec{2, 512, 31, 1000});
  const SplineBasis b = SplineBasis::for_levels(g);
  const SarModel a = sar_fit(qcser(y, g), b);
  const SarModel c = sar_fit(qcser(y, g), b);
  CHECK(a == c);
  const std::vector<double> w = fourier_frequencies(512);
  CHECK(eval_spectrum(a, w, g).s == eval_spectrum(c, w, g).s);
}

TEST_CASE("SAR spectrum is evaluated at the spline coefficients") {
  const QuantileGrid g = QuantileGrid::standard();
  const QcsMatrix q = case1_qcs(256, 20, g);
  const SplineBasis b = SplineBasis::for_levels(g);
  const SarModel m = sar_fit(q, b);
  const std::vector<double> w = fourier_frequencies(256);
  const SpectrumGrid s = eval_spectrum(m, w, g);
  CHECK(s.s.minCoeff() > 0.0);
  CHECK(s.s.allFinite());
  for (int l : {0, 45, 90}) {
    Eigen::VectorXd a(m.p);
    const Eigen::VectorXd phi = b.eval(g[l]);
    for (int j = 0; j < m.p; ++j) a[j] = phi.dot(m.theta.segment(j * b.size(), b.size()));
    CHECK(a == m.coefficients_at(g[l]));
    ArFit one;
    one.p = m.p;
    one.alphas = QuantileGrid({g[l]});
    one.coeffs = a;
    one.sigma2 = Eigen::VectorXd::Constant(1, m.sigma2_at(g[l]));
    CHECK(eval_spectrum(one, w).s.col(0) == s.s.col(l));
  }
}
