#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qcspec/error.hpp"
#include "qcspec/estimators.hpp"
#include "lagged.hpp"

namespace qcspec {

namespace lagged {

Eigen::MatrixXd design(const double* col, Eigen::Index n, int p, Eigen::Index start) {
  Eigen::MatrixXd x(n - start, p);
  for (Eigen::Index t = start; t < n; ++t)
    for (int j = 0; j < p; ++j) x(t - start, j) = col[t - 1 - j];
  return x;
}

Moments moments(const double* col, Eigen::Index n, int p, Eigen::Index start) {
  Moments m;
  const Eigen::Map<const Eigen::VectorXd> y(col + start, n - start);
  m.yy = y.squaredNorm();
  if (p == 0) {
    m.cross.resize(0, 0);
    m.target.resize(0);
    return m;
  }
  const Eigen::MatrixXd x = design(col, n, p, start);
  m.cross = x.transpose() * x;
  m.target = x.transpose() * y;
  return m;
}

}  // namespace lagged

namespace {

void check_order(const QcsMatrix& qcs, int p) {
  if (p < 0) throw_input("AR order must be nonnegative");
  if (2 * static_cast<Eigen::Index>(p) >= qcs.n()) throw_input("AR order must satisfy p < n/2");
}

// Cholesky of a normal matrix; rejects a collinear design, whose last pivot is
// rounding noise rather than an exact zero.
Eigen::LLT<Eigen::MatrixXd> design_cholesky(const Eigen::MatrixXd& cross) {
  Eigen::LLT<Eigen::MatrixXd> llt(cross);
  if (llt.info() != Eigen::Success) throw_estimation("singular design in least-squares AR fit");
  const Eigen::VectorXd pivots = Eigen::MatrixXd(llt.matrixL()).diagonal();
  if (!(pivots.minCoeff() > 1e-7 * pivots.maxCoeff())) throw_estimation("singular design in least-squares AR fit");
  return llt;
}

// Runs body(l) for every level in parallel. The first error (lowest level)
// is rethrown after the loop so the outcome matches a serial run.
template <typename Body>
void for_each_level(Eigen::Index levels, Body&& body) {
  std::vector<std::string> errors(levels);
  std::vector<char> failed(levels, 0);
  std::vector<ErrorKind> kinds(levels, ErrorKind::estimation);
#pragma omp parallel for schedule(static) if (levels > 8)
  for (Eigen::Index l = 0; l < levels; ++l) {
    try {
      body(l);
    } catch (const Error& e) {
      failed[l] = 1;
      errors[l] = e.what();
      kinds[l] = e.kind();
    }
  }
  for (Eigen::Index l = 0; l < levels; ++l)
    if (failed[l]) throw Error(kinds[l], errors[l]);
}

}  // namespace

ArFit ar_fit_ls(const QcsMatrix& qcs, int p) {
  check_order(qcs, p);
  const Eigen::Index n = qcs.n();
  const Eigen::Index levels = qcs.levels();
  ArFit fit;
  fit.p = p;
  fit.method = ArMethod::least_squares;
  fit.alphas = qcs.alphas;
  fit.coeffs.resize(p, levels);
  fit.sigma2.resize(levels);
  for_each_level(levels, [&](Eigen::Index l) {
    const double* col = qcs.u.col(l).data();
    const Eigen::Map<const Eigen::VectorXd> y(col + p, n - p);
    if (p == 0) {
      fit.sigma2[l] = y.squaredNorm() / static_cast<double>(n);
      return;
    }
    const Eigen::MatrixXd x = lagged::design(col, n, p, p);
    const Eigen::LLT<Eigen::MatrixXd> llt = design_cholesky(x.transpose() * x);
    const Eigen::VectorXd a = llt.solve(x.transpose() * y);
    fit.coeffs.col(l) = a;
    fit.sigma2[l] = (y - x * a).squaredNorm() / static_cast<double>(n - p);
  });
  return fit;
}

ArFit ar_fit_yw(const QAcf& acf, int p) {
  if (p < 0) throw_input("AR order must be nonnegative");
  if (p > acf.maxlag) throw_input("AR order exceeds maxlag of the autocovariances");
  const Eigen::Index levels = acf.r.cols();
  ArFit fit;
  fit.p = p;
  fit.method = ArMethod::yule_walker;
  fit.alphas = acf.alphas;
  fit.coeffs.resize(p, levels);
  fit.reflection.resize(p, levels);
  fit.sigma2.resize(levels);
  for (Eigen::Index l = 0; l < levels; ++l) {
    const auto r = acf.r.col(l);
    if (!(r[0] > 0.0)) throw_estimation("nonpositive-definite ACF");
    Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd prev(p);
    double v = r[0];
    for (int k = 1; k <= p; ++k) {
      double acc = r[k];
      for (int j = 1; j < k; ++j) acc -= a[j - 1] * r[k - j];
      const double kappa = acc / v;
      if (!(std::abs(kappa) < 1.0)) throw_estimation("nonpositive-definite ACF");
      prev.head(k - 1) = a.head(k - 1);
      for (int j = 1; j < k; ++j) a[j - 1] = prev[j - 1] - kappa * prev[k - j - 1];
      a[k - 1] = kappa;
      fit.reflection(k - 1, l) = kappa;
      v *= 1.0 - kappa * kappa;
    }
    fit.coeffs.col(l) = a;
    double s2 = r[0];
    for (int j = 1; j <= p; ++j) s2 -= a[j - 1] * r[j];
    fit.sigma2[l] = s2;
  }
  return fit;
}

AicTable aic_table(const QcsMatrix& qcs, int pmax, ArMethod method) {
  if (pmax < 0) throw_input("pmax must be nonnegative");
  if (4 * static_cast<Eigen::Index>(pmax) >= qcs.n()) throw_input("pmax must satisfy pmax < n/4");
  const Eigen::Index n = qcs.n();
  const Eigen::Index levels = qcs.levels();
  AicTable table;
  table.aic.resize(pmax + 1, levels);
  constexpr double kTiny = std::numeric_limits<double>::min();
  if (method == ArMethod::least_squares) {
    const Eigen::Index n_eff = n - pmax;
    for_each_level(levels, [&](Eigen::Index l) {
      const lagged::Moments m = lagged::moments(qcs.u.col(l).data(), n, pmax, pmax);
      for (int p = 0; p <= pmax; ++p) {
        double rss = m.yy;
        if (p > 0) {
          const Eigen::LLT<Eigen::MatrixXd> llt = design_cholesky(m.cross.topLeftCorner(p, p));
          rss -= m.target.head(p).dot(llt.solve(m.target.head(p)));
        }
        const double s2 = std::max(rss / static_cast<double>(n_eff), kTiny);
        table.aic(p, l) = static_cast<double>(n_eff) * std::log(s2) + 2.0 * p;
      }
    });
  } else {
    const QAcf acf = qacf(qcs, pmax);
    for (int p = 0; p <= pmax; ++p) {
      const ArFit fit = ar_fit_yw(acf, p);
      for (Eigen::Index l = 0; l < levels; ++l)
        table.aic(p, l) = static_cast<double>(n) * std::log(std::max(fit.sigma2[l], kTiny)) + 2.0 * p;
    }
  }
  table.mean_aic = table.aic.rowwise().mean();
  table.best = static_cast<int>(argmin_first({table.mean_aic.data(), static_cast<std::size_t>(table.mean_aic.size())}));
  return table;
}

int select_order_aic(const QcsMatrix& qcs, int pmax, ArMethod method) { return aic_table(qcs, pmax, method).best; }

ArFit fit_ar(const QcsMatrix& qcs, const ArOptions& options) {
  const int p = options.p ? *options.p : select_order_aic(qcs, options.pmax, options.method);
  if (options.method == ArMethod::least_squares) return ar_fit_ls(qcs, p);
  check_order(qcs, p);
  return ar_fit_yw(qacf(qcs, p), p);
}

SpectrumGrid spec_ar(const QcsMatrix& qcs, const ArOptions& options) {
  if (qcs.n() < 8) throw_input("series too short: need n >= 8");
  const ArFit fit = fit_ar(qcs, options);
  SpectrumGrid g = eval_spectrum(fit, fourier_frequencies(qcs.n()), options.normalized);
  g.n = qcs.n();
  return g;
}

// ---------------------------------------------------------------------------
// AR-S

namespace {

double variance_floor(double alpha) { return 1e-6 * alpha * (1.0 - alpha); }

}  // namespace

Eigen::VectorXd ArsModel::coefficients_at(double alpha) const {
  Eigen::VectorXd a(p);
  const Eigen::VectorXd phi = basis.eval(alpha);
  for (int j = 0; j < p; ++j) a[j] = phi.dot(coeff_fits[j].coeffs);
  return a;
}

double ArsModel::sigma2_at(double alpha) const {
  return std::max(sigma2_fit.value(basis, alpha), variance_floor(alpha));
}

ArsModel smooth_ar_fit(const ArFit& fit, int num_basis, const LambdaSearch& search) {
  if (fit.alphas.size() < 4) throw_input("insufficient quantile levels");
  ArsModel model;
  model.p = fit.p;
  model.alphas = fit.alphas;
  model.basis = SplineBasis::for_levels(fit.alphas, num_basis);
  const Eigen::MatrixXd q = penalty_matrix(model.basis, PenaltyMode::integral);
  const auto x = fit.alphas.levels();
  const auto levels = static_cast<Eigen::Index>(x.size());
  model.coeff_fits.resize(fit.p);
  std::vector<double> y(levels);
  for (int j = 0; j < fit.p; ++j) {
    for (Eigen::Index l = 0; l < levels; ++l) y[l] = fit.coeffs(j, l);
    model.coeff_fits[j] = smooth_spline_fit(model.basis, q, x, y, std::nullopt, search);
  }
  for (Eigen::Index l = 0; l < levels; ++l) y[l] = fit.sigma2[l];
  model.sigma2_fit = smooth_spline_fit(model.basis, q, x, y, std::nullopt, search);
  return model;
}

ArsModel ars_fit(const QcsMatrix& qcs, const ArsOptions& options) {
  if (qcs.levels() < 4) throw_input("insufficient quantile levels");
  ArOptions ar;
  ar.p = options.p;
  ar.pmax = options.pmax;
  return smooth_ar_fit(fit_ar(qcs, ar), options.num_basis, options.search);
}

SpectrumGrid spec_ars(const QcsMatrix& qcs, const ArsOptions& options) {
  if (qcs.n() < 8) throw_input("series too short: need n >= 8");
  const ArsModel model = ars_fit(qcs, options);
  SpectrumGrid g = eval_spectrum(model, fourier_frequencies(qcs.n()), qcs.alphas, options.normalized);
  g.n = qcs.n();
  return g;
}

}  // namespace qcspec
