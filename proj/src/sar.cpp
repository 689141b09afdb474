#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qcspec/error.hpp"
#include "qcspec/estimators.hpp"
#include "lagged.hpp"

namespace qcspec {

SarSystem::SarSystem(const QcsMatrix& qcs, const SplineBasis& basis, int p, const Eigen::MatrixXd& q,
                     int max_params)
    : p_(p), rows_(qcs.n() - p), levels_(qcs.levels()) {
  if (p < 0) throw_input("AR order must be nonnegative");
  if (2 * static_cast<Eigen::Index>(p) >= qcs.n()) throw_input("AR order must satisfy p < n/2");
  const int k = basis.size();
  const Eigen::Index kp = static_cast<Eigen::Index>(k) * p;
  if (kp > max_params) throw_input("K*p = " + std::to_string(kp) + " exceeds the parameter cap");
  if (q.rows() != k || q.cols() != k) throw_input("penalty dimension mismatch");

  const Eigen::Index n = qcs.n();
  std::vector<lagged::Moments> per_level(levels_);
  std::vector<Eigen::VectorXd> phis(levels_);
  bool out_of_domain = false;
#pragma omp parallel for schedule(static) if (levels_ > 8)
  for (Eigen::Index l = 0; l < levels_; ++l) {
    per_level[l] = lagged::moments(qcs.u.col(l).data(), n, p, p);
    const double a = qcs.alphas[l];
    if (a < basis.lo() - 1e-12 || a > basis.hi() + 1e-12) {
#pragma omp atomic write
      out_of_domain = true;
    } else {
      phis[l] = basis.eval(a);
    }
  }
  if (out_of_domain) throw_input("out of domain");

  gram_ = Eigen::MatrixXd::Zero(kp, kp);
  rhs_ = Eigen::VectorXd::Zero(kp);
  // Fixed level order keeps the accumulation deterministic.
  for (Eigen::Index l = 0; l < levels_; ++l) {
    const auto& m = per_level[l];
    const Eigen::MatrixXd outer = phis[l] * phis[l].transpose();
    for (int j = 0; j < p; ++j) {
      rhs_.segment(static_cast<Eigen::Index>(j) * k, k) += m.target[j] * phis[l];
      for (int jj = 0; jj < p; ++jj)
        gram_.block(static_cast<Eigen::Index>(j) * k, static_cast<Eigen::Index>(jj) * k, k, k) +=
            m.cross(j, jj) * outer;
    }
    yy_ += m.yy;
  }
  penalty_ = Eigen::MatrixXd::Zero(kp, kp);
  for (int j = 0; j < p; ++j)
    penalty_.block(static_cast<Eigen::Index>(j) * k, static_cast<Eigen::Index>(j) * k, k, k) = q;
  if (kp == 0) return;

  const Eigen::LLT<Eigen::MatrixXd> chol(gram_);
  if (chol.info() != Eigen::Success) return;
  const Eigen::MatrixXd c = chol.matrixL();
  const Eigen::VectorXd diag = c.diagonal().cwiseAbs();
  if (!(diag.minCoeff() > 1e-7 * diag.maxCoeff())) return;
  const Eigen::MatrixXd cinv = c.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(kp, kp));
  const Eigen::MatrixXd pt = cinv * penalty_ * cinv.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (pt + pt.transpose()));
  if (es.info() != Eigen::Success) return;
  d_ = es.eigenvalues();
  // Null-space eigenvalues come back as rounding noise; they are exactly zero.
  const double tol = 1e-12 * d_.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < kp; ++i)
    if (d_[i] < tol) d_[i] = 0.0;
  transform_ = cinv.transpose() * es.eigenvectors();
  w_ = es.eigenvectors().transpose() * (cinv * rhs_);
  spectral_ = true;
}

SarSystem::Solution SarSystem::solve(double lambda, bool with_trace) const {
  if (!(lambda >= 0.0)) throw_input("lambda must be nonnegative");
  Solution sol;
  if (p_ == 0) {
    sol.rss = yy_;
    return sol;
  }
  if (spectral_) {
    const Eigen::ArrayXd shrink = 1.0 / (1.0 + (static_cast<double>(rows_) * lambda) * d_.array());
    sol.theta = transform_ * (shrink * w_.array()).matrix();
    sol.rss = std::max(0.0, yy_ - w_.squaredNorm() + ((1.0 - shrink) * w_.array()).square().sum());
    if (with_trace) sol.edf = shrink.sum();
    return sol;
  }
  const Eigen::MatrixXd g = gram_ + (static_cast<double>(rows_) * lambda) * penalty_;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw_estimation("singular system; increase lambda");
  const Eigen::VectorXd pivots = Eigen::MatrixXd(llt.matrixL()).diagonal().cwiseAbs();
  if (!(pivots.minCoeff() > 1e-7 * pivots.maxCoeff())) throw_estimation("singular system; increase lambda");
  sol.theta = llt.solve(rhs_);
  if (!sol.theta.allFinite()) throw_estimation("singular system; increase lambda");
  sol.rss = std::max(0.0, yy_ - 2.0 * sol.theta.dot(rhs_) + sol.theta.dot(gram_ * sol.theta));
  // Cyclic trace: sum_l tr(X_l G^{-1} X_l') = tr(G^{-1} sum_l X_l' X_l).
  if (with_trace) sol.edf = llt.solve(gram_).trace();
  return sol;
}

double SarSystem::gcv(double lambda) const {
  const Solution sol = solve(lambda);
  const auto total = static_cast<double>(observations());
  const double den = 1.0 - sol.edf / total;
  if (!(den > 0.0)) throw_estimation("effective df exceeds sample");
  return (sol.rss / total) / (den * den);
}

Eigen::MatrixXd sar_penalty(const SplineBasis& basis, const QuantileGrid& alphas, PenaltyMode mode) {
  if (basis.degree() < 2) return Eigen::MatrixXd::Zero(basis.size(), basis.size());
  return penalty_matrix(basis, mode, alphas.levels());
}

Eigen::VectorXd sar_solve(const QcsMatrix& qcs, const SplineBasis& basis, int p, double lambda, PenaltyMode mode) {
  const SarSystem sys(qcs, basis, p, sar_penalty(basis, qcs.alphas, mode));
  return sys.solve(lambda, false).theta;
}

double sar_trace_hat(const QcsMatrix& qcs, const SplineBasis& basis, int p, double lambda, PenaltyMode mode) {
  const SarSystem sys(qcs, basis, p, sar_penalty(basis, qcs.alphas, mode));
  return sys.solve(lambda).edf;
}

double sar_gcv(const QcsMatrix& qcs, const SplineBasis& basis, int p, double lambda, PenaltyMode mode) {
  const SarSystem sys(qcs, basis, p, sar_penalty(basis, qcs.alphas, mode));
  return sys.gcv(lambda);
}

Eigen::VectorXd SarModel::coefficients_at(double alpha) const {
  const Eigen::VectorXd phi = basis.eval(alpha);
  const Eigen::Index k = phi.size();
  Eigen::VectorXd a(p);
  for (int j = 0; j < p; ++j) a[j] = phi.dot(theta.segment(static_cast<Eigen::Index>(j) * k, k));
  return a;
}

double SarModel::sigma2_at(double alpha) const {
  return std::max(sigma2_fit.value(basis, alpha), 1e-6 * alpha * (1.0 - alpha));
}

bool operator==(const SarModel& a, const SarModel& b) {
  const auto same_fit = [](const SmoothFit& x, const SmoothFit& y) {
    return x.coeffs == y.coeffs && x.lambda == y.lambda && x.edf == y.edf && x.rss == y.rss &&
           (x.gcv_value == y.gcv_value || (std::isnan(x.gcv_value) && std::isnan(y.gcv_value)));
  };
  return a.p == b.p && a.theta == b.theta && a.basis == b.basis && a.lambda == b.lambda &&
         same_fit(a.sigma2_fit, b.sigma2_fit) && a.gcv_value == b.gcv_value && a.edf == b.edf && a.alphas == b.alphas;
}

SarModel sar_fit(const QcsMatrix& qcs, const SplineBasis& basis, const SarOptions& options) {
  if (qcs.n() < 8) throw_input("series too short: need n >= 8");
  const int p = options.p ? *options.p : select_order_aic(qcs, options.pmax, ArMethod::least_squares);
  const Eigen::MatrixXd q = sar_penalty(basis, qcs.alphas, options.penalty);
  const ArFit ls = ar_fit_ls(qcs, p);

  SarModel model;
  model.p = p;
  model.basis = basis;
  model.alphas = qcs.alphas;
  std::optional<double> variance_lambda;
  if (p > 0) {
    const SarSystem sys(qcs, basis, p, q, options.max_params);
    double lambda = 0.0;
    if (options.lambda) {
      lambda = *options.lambda;
    } else {
      const auto objective = [&](double lam) {
        try {
          return sys.gcv(lam);
        } catch (const Error&) {
          return std::numeric_limits<double>::infinity();
        }
      };
      lambda = minimize_log_scale(objective, options.search).x;
    }
    const SarSystem::Solution sol = sys.solve(lambda);
    model.theta = sol.theta;
    model.lambda = lambda;
    model.edf = sol.edf;
    const auto total = static_cast<double>(sys.observations());
    const double den = 1.0 - sol.edf / total;
    model.gcv_value = den > 0.0 ? (sol.rss / total) / (den * den) : std::numeric_limits<double>::infinity();
    variance_lambda = lambda;
  } else {
    model.theta.resize(0);
    variance_lambda = options.lambda;
  }
  const std::vector<double> s2(ls.sigma2.data(), ls.sigma2.data() + ls.sigma2.size());
  model.sigma2_fit = smooth_spline_fit(basis, q, qcs.alphas.levels(), s2, variance_lambda, options.search);
  return model;
}

}  // namespace qcspec
