#pragma once

// B-spline bases over a quantile interval, second-derivative roughness
// penalties, and penalized least-squares smoothing with GCV.

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qcspec/line_search.hpp"

namespace qcspec {

class QuantileGrid;

/// Clamped B-spline basis of a given degree on [lo, hi]. Immutable.
class SplineBasis {
 public:
  /// interior_knots must lie strictly inside (lo, hi) and increase.
  SplineBasis(double lo, double hi, std::vector<double> interior_knots, int degree = 3);

  /// num_basis functions with equally spaced interior knots.
  static SplineBasis uniform(double lo, double hi, int num_basis, int degree = 3);

  /// Basis over [alpha_1, alpha_L] with min(num_basis, L) functions; the
  /// degree drops below cubic only when the grid is too small to carry it.
  /// A single level yields the constant basis (K = 1, degree 0).
  static SplineBasis for_levels(const QuantileGrid& alphas, int num_basis = 14);

  int degree() const noexcept { return degree_; }
  int size() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::span<const double> knots() const noexcept { return knots_; }
  std::span<const double> interior_knots() const noexcept {
    return std::span<const double>(knots_).subspan(degree_ + 1, knots_.size() - 2 * (degree_ + 1));
  }

  /// phi(alpha); throws "out of domain" outside [lo, hi].
  Eigen::VectorXd eval(double alpha) const;
  /// d^order/dalpha^order phi(alpha).
  Eigen::VectorXd eval_derivative(double alpha, int order) const;
  /// Rows phi(x_i)^T.
  Eigen::MatrixXd design(std::span<const double> xs) const;

  friend bool operator==(const SplineBasis&, const SplineBasis&) = default;

 private:
  Eigen::VectorXd values_of_degree(double alpha, int degree) const;

  double lo_ = 0.0;
  double hi_ = 1.0;
  int degree_ = 3;
  std::vector<double> knots_;
};

enum class PenaltyMode {
  integral,  ///< [int phi_k'' phi_k''' dalpha], exact Gauss-Legendre per knot span
  grid_sum,  ///< sum over grid points of phi''(x) phi''(x)^T
};

/// Roughness penalty. grid must be given for grid_sum mode.
Eigen::MatrixXd penalty_matrix(const SplineBasis& basis, PenaltyMode mode, std::span<const double> grid = {});

/// Fitted smoothing spline.
struct SmoothFit {
  Eigen::VectorXd coeffs;
  double lambda = 0.0;
  double gcv_value = 0.0;
  double edf = 0.0;
  double rss = 0.0;

  double value(const SplineBasis& basis, double alpha) const { return basis.eval(alpha).dot(coeffs); }
};

/// Minimizes sum_i (y_i - phi(x_i)^T c)^2 + lambda c^T Q c. With no lambda the
/// value minimizing GCV(lambda) = m RSS / (m - tr H)^2 is searched for.
SmoothFit smooth_spline_fit(const SplineBasis& basis, const Eigen::MatrixXd& penalty, std::span<const double> x,
                            std::span<const double> y, std::optional<double> lambda,
                            const LambdaSearch& search = {});

/// Convenience form: basis of min(14, |x|) cubic functions over [x_1, x_m] and
/// the integral penalty.
SmoothFit smooth_spline_fit(std::span<const double> x, std::span<const double> y, std::optional<double> lambda);

/// Hat-matrix trace of the smoother at a given lambda, tr((B'B + lambda Q)^{-1} B'B).
double smoother_trace(const SplineBasis& basis, const Eigen::MatrixXd& penalty, std::span<const double> x,
                      double lambda);

}  // namespace qcspec
