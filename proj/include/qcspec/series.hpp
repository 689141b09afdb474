#pragma once

// Quantile-crossing series and their sample autocovariances.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qcspec {

/// Observed series y_1..y_n. Construction rejects NaN/Inf.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Throws unless size() >= 8; called by every estimation entry point.
  void require_estimable() const;

 private:
  std::vector<double> values_;
};

/// Strictly increasing quantile levels in (0, 1).
class QuantileGrid {
 public:
  QuantileGrid() = default;
  explicit QuantileGrid(std::vector<double> levels);

  /// {lo, lo+step, ..., hi}; levels are formed as lo + i*step and rounded to
  /// 12 decimals so that 0.05:0.95:0.01 gives the exact decimal literals.
  static QuantileGrid uniform(double lo, double hi, double step);
  /// {0.05, 0.06, ..., 0.95}, L = 91.
  static QuantileGrid standard();

  std::size_t size() const noexcept { return levels_.size(); }
  std::span<const double> levels() const noexcept { return levels_; }
  double operator[](std::size_t i) const { return levels_[i]; }
  double front() const { return levels_.front(); }
  double back() const { return levels_.back(); }

  friend bool operator==(const QuantileGrid&, const QuantileGrid&) = default;

 private:
  std::vector<double> levels_;
};

/// n x L matrix of empirical crossing values; column l holds alpha_l - I(y_t <= qhat_l).
struct QcsMatrix {
  Eigen::MatrixXd u;
  QuantileGrid alphas;
  std::vector<double> qhat;

  Eigen::Index n() const noexcept { return u.rows(); }
  Eigen::Index levels() const noexcept { return u.cols(); }
};

/// (maxlag+1) x L sample autocovariances with divisor n.
struct QAcf {
  Eigen::MatrixXd r;
  int maxlag = 0;
  Eigen::Index n = 0;
  QuantileGrid alphas;
};

/// Rank of the type-1 sample quantile: ceil(n * alpha), clamped to [1, n].
/// n*alpha within 1e-9 of an integer is treated as that integer, so decimal
/// levels such as 0.07 are not pushed up by binary rounding.
std::size_t quantile_rank(std::size_t n, double alpha);

/// ceil(n*alpha)-th order statistic (left-continuous inverse empirical CDF).
double sample_quantile(std::span<const double> y, double alpha);

QcsMatrix qcser(const TimeSeries& y, const QuantileGrid& alphas);

/// Crossing columns built against given (e.g. population) quantiles.
QcsMatrix qcser_at(const TimeSeries& y, const QuantileGrid& alphas, std::span<const double> quantiles);

QAcf qacf(const QcsMatrix& qcs, int maxlag);

}  // namespace qcspec
