#pragma once

// Quantile-crossing spectrum estimators: lag-window (LW), per-quantile
// autoregression (AR), AR with post-smoothing across quantiles (AR-S), and
// spline autoregression (SAR).

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcspec/line_search.hpp"
#include "qcspec/series.hpp"
#include "qcspec/spline.hpp"

namespace qcspec {

/// Spectrum values over (frequency, quantile level). s has one row per
/// frequency (ascending) and one column per level.
struct SpectrumGrid {
  std::vector<double> freqs;
  QuantileGrid alphas;
  Eigen::MatrixXd s;
  bool normalized = false;
  /// Series length behind a Fourier frequency grid, 0 for other grids.
  Eigen::Index n = 0;
  std::vector<std::pair<std::string, std::string>> meta;

  void set_meta(const std::string& key, const std::string& value);
  std::optional<std::string> find_meta(const std::string& key) const;
};

/// omega_k = 2 pi k / n for k = 1..floor((n-1)/2).
std::vector<double> fourier_frequencies(Eigen::Index n);

/// Divides column l by alpha_l (1 - alpha_l).
void normalize_columns(Eigen::MatrixXd& s, const QuantileGrid& alphas);

// ---------------------------------------------------------------------------
// Lag-window estimator

/// Tukey-Hanning lag-window estimate on the Fourier grid of acf.n.
SpectrumGrid spec_lw(const QAcf& acf, int bandwidth, bool normalized = false);

// ---------------------------------------------------------------------------
// Per-quantile autoregression

enum class ArMethod { least_squares, yule_walker };

struct ArFit {
  int p = 0;
  Eigen::MatrixXd coeffs;  ///< p x L, entry (j-1, l) = a_j(alpha_l)
  Eigen::VectorXd sigma2;  ///< residual variance per level
  ArMethod method = ArMethod::least_squares;
  QuantileGrid alphas;
  Eigen::MatrixXd reflection;  ///< p x L Levinson reflection coefficients (Yule-Walker only)
};

/// Least squares without intercept on t = p+1..n; sigma2 = RSS / (n - p).
ArFit ar_fit_ls(const QcsMatrix& qcs, int p);

/// Levinson-Durbin solution of the Yule-Walker equations per level;
/// sigma2 = R(0) - a' gamma.
ArFit ar_fit_yw(const QAcf& acf, int p);

/// Average-over-levels AIC, n_eff log sigma2_p + 2p, for p = 0..pmax. For least
/// squares every order is fitted on the common window t = pmax+1..n.
struct AicTable {
  Eigen::MatrixXd aic;        ///< (pmax+1) x L
  Eigen::VectorXd mean_aic;   ///< pmax+1
  int best = 0;
};
AicTable aic_table(const QcsMatrix& qcs, int pmax, ArMethod method = ArMethod::least_squares);

/// argmin_p of the averaged AIC; ties go to the smaller order.
int select_order_aic(const QcsMatrix& qcs, int pmax, ArMethod method = ArMethod::least_squares);

struct ArOptions {
  std::optional<int> p;  ///< unset: AIC selection
  int pmax = 20;
  ArMethod method = ArMethod::least_squares;
  bool normalized = false;
};

ArFit fit_ar(const QcsMatrix& qcs, const ArOptions& options);
SpectrumGrid spec_ar(const QcsMatrix& qcs, const ArOptions& options = {});

// ---------------------------------------------------------------------------
// AR with post-smoothing (AR-S)

struct ArsModel {
  int p = 0;
  SplineBasis basis = SplineBasis::uniform(0.0, 1.0, 4);
  std::vector<SmoothFit> coeff_fits;  ///< one per lag j
  SmoothFit sigma2_fit;
  QuantileGrid alphas;

  Eigen::VectorXd coefficients_at(double alpha) const;
  /// Smoothed variance, floored at 1e-6 alpha (1 - alpha).
  double sigma2_at(double alpha) const;
};

struct ArsOptions {
  std::optional<int> p;
  int pmax = 20;
  int num_basis = 14;
  bool normalized = false;
  LambdaSearch search;
};

/// Smooths each coefficient sequence and the variance sequence of a
/// per-quantile fit with its own GCV-chosen smoothing parameter (integral penalty).
ArsModel smooth_ar_fit(const ArFit& fit, int num_basis = 14, const LambdaSearch& search = {});
ArsModel ars_fit(const QcsMatrix& qcs, const ArsOptions& options = {});
SpectrumGrid spec_ars(const QcsMatrix& qcs, const ArsOptions& options = {});

// ---------------------------------------------------------------------------
// Spline autoregression (SAR)

/// Sufficient statistics of the penalized SAR problem for a fixed order:
/// gram = sum_l X_l' X_l, rhs = sum_l X_l' u_l, penalty = I_p (x) Q, and
/// yy = sum_l u_l' u_l. theta is stacked as [theta_1; ...; theta_p], theta_j in R^K.
/// X_l is never formed: X_l' X_l = (U_l' U_l) (x) phi(alpha_l) phi(alpha_l)'.
class SarSystem {
 public:
  SarSystem(const QcsMatrix& qcs, const SplineBasis& basis, int p, const Eigen::MatrixXd& q,
            int max_params = 2000);

  struct Solution {
    Eigen::VectorXd theta;
    double rss = 0.0;  ///< sum_l ||u_l - U_l a(alpha_l)||^2
    double edf = 0.0;  ///< tr(H_lambda)
  };

  /// Solves (gram + (n-p) lambda penalty) theta = rhs by Cholesky.
  Solution solve(double lambda, bool with_trace = true) const;
  /// [ rss / N ] / [1 - edf / N]^2 with N = L (n - p).
  double gcv(double lambda) const;

  int order() const noexcept { return p_; }
  Eigen::Index samples() const noexcept { return rows_; }          ///< n - p
  Eigen::Index observations() const noexcept { return rows_ * levels_; }  ///< L (n - p)
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  const Eigen::VectorXd& rhs() const noexcept { return rhs_; }
  const Eigen::MatrixXd& penalty() const noexcept { return penalty_; }

 private:
  int p_;
  Eigen::Index rows_;
  Eigen::Index levels_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd rhs_;
  Eigen::MatrixXd penalty_;
  double yy_ = 0.0;
  // With gram = C C' nonsingular and C^{-1} penalty C^{-T} = U diag(d) U',
  // theta = C^{-T} U diag(s) w with s = 1 / (1 + (n-p) lambda d) and w = U' C^{-1} rhs.
  // This form keeps the penalty null space exact for large lambda.
  bool spectral_ = false;
  Eigen::MatrixXd transform_;
  Eigen::VectorXd d_;
  Eigen::VectorXd w_;
};

/// Roughness penalty used by SAR for a basis on a grid. Bases of degree < 2
/// (tiny grids) carry no curvature and get a zero penalty.
Eigen::MatrixXd sar_penalty(const SplineBasis& basis, const QuantileGrid& alphas, PenaltyMode mode);

Eigen::VectorXd sar_solve(const QcsMatrix& qcs, const SplineBasis& basis, int p, double lambda,
                          PenaltyMode mode = PenaltyMode::grid_sum);
double sar_trace_hat(const QcsMatrix& qcs, const SplineBasis& basis, int p, double lambda,
                     PenaltyMode mode = PenaltyMode::grid_sum);
double sar_gcv(const QcsMatrix& qcs, const SplineBasis& basis, int p, double lambda,
               PenaltyMode mode = PenaltyMode::grid_sum);

struct SarModel {
  int p = 0;
  Eigen::VectorXd theta;
  SplineBasis basis = SplineBasis::uniform(0.0, 1.0, 4);
  double lambda = 0.0;
  SmoothFit sigma2_fit;
  double gcv_value = 0.0;
  double edf = 0.0;
  QuantileGrid alphas;

  /// [a_1(alpha), ..., a_p(alpha)] with a_j = phi(alpha)' theta_j.
  Eigen::VectorXd coefficients_at(double alpha) const;
  /// Smoothed variance, floored at 1e-6 alpha (1 - alpha).
  double sigma2_at(double alpha) const;

  friend bool operator==(const SarModel& a, const SarModel& b);
};

struct SarOptions {
  std::optional<int> p;
  int pmax = 20;
  std::optional<double> lambda;  ///< unset: GCV
  PenaltyMode penalty = PenaltyMode::grid_sum;
  LambdaSearch search;
  int max_params = 2000;
};

SarModel sar_fit(const QcsMatrix& qcs, const SplineBasis& basis, const SarOptions& options = {});

// ---------------------------------------------------------------------------
// Spectrum evaluation

SpectrumGrid eval_spectrum(const ArFit& fit, std::span<const double> freqs, bool normalized = false);
SpectrumGrid eval_spectrum(const ArsModel& model, std::span<const double> freqs, const QuantileGrid& alphas,
                           bool normalized = false);
SpectrumGrid eval_spectrum(const SarModel& model, std::span<const double> freqs, const QuantileGrid& alphas,
                           bool normalized = false);

}  // namespace qcspec
