#pragma once

// Error metrics against a true spectrum and the Monte Carlo comparison harness.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcspec/estimators.hpp"
#include "qcspec/simulate.hpp"

namespace qcspec {

/// Throws a consistency error unless the two grids share frequencies, levels
/// and normalization.
void require_same_grid(const SpectrumGrid& a, const SpectrumGrid& b);

/// Grid mean of r - log r - 1 with r = est / truth. Every cell must be positive.
double kld(const SpectrumGrid& est, const SpectrumGrid& truth);

struct FlooredKld {
  double value = 0.0;
  Eigen::Index floored = 0;  ///< cells raised to the floor
};

/// KLD after raising estimate cells to 1e-8 alpha (1 - alpha) (1e-8 on a
/// normalized grid). Used for lag-window estimates, which can go negative.
FlooredKld kld_floored(const SpectrumGrid& est, const SpectrumGrid& truth);

/// Grid mean of (est - truth)^2.
double mse(const SpectrumGrid& est, const SpectrumGrid& truth);
double rmse(const SpectrumGrid& est, const SpectrumGrid& truth);

enum class EstimatorKind { lw, ar, ars, sar };

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::sar;
  std::optional<int> p;           ///< AR order; unset selects by AIC
  int pmax = 20;
  int bandwidth = 0;              ///< LW lag-window bandwidth M
  std::optional<double> lambda;   ///< SAR smoothing parameter; unset selects by GCV
  int knots = 14;                 ///< number of spline basis functions K
  ArMethod method = ArMethod::least_squares;
  bool normalized = false;

  std::string label() const;
};

EstimatorKind parse_estimator(const std::string& name);
std::string estimator_name(EstimatorKind kind);

/// Runs one estimator on a series; the output lies on the Fourier grid of y.
SpectrumGrid estimate(const TimeSeries& y, const QuantileGrid& alphas, const EstimatorConfig& config);
SpectrumGrid estimate(const QcsMatrix& qcs, const EstimatorConfig& config);

struct RunRecord {
  int run = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  double kld = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  Eigen::Index floored = 0;
};

struct EvalReport {
  std::string estimator;
  int case_id = 1;
  Eigen::Index n = 0;
  int runs = 0;
  int failed = 0;
  double kld_mean = 0.0;
  /// sqrt of the ensemble mean of the per-run mean squared errors.
  double rmse_mean = 0.0;
  double kld_se = 0.0;
  double rmse_se = 0.0;
  std::vector<RunRecord> records;
};

struct MonteCarloSetup {
  int case_id = 1;
  Eigen::Index n = 256;
  int runs = 100;
  std::uint64_t seed = 1;
  Eigen::Index burn_in = 1000;
  QuantileGrid alphas = QuantileGrid::standard();
};

/// Run r simulates with seed (setup.seed XOR r), fits every estimator and
/// scores it against truth. Runs are distributed over OpenMP threads; the
/// per-run records and the reductions do not depend on the thread count.
/// Failed runs are recorded and excluded from the means.
std::vector<EvalReport> run_monte_carlo(const MonteCarloSetup& setup, const std::vector<EstimatorConfig>& estimators,
                                        const TruthGrid& truth);

/// Summary statistics of a set of per-run records.
EvalReport summarize(const std::string& estimator, int case_id, Eigen::Index n, std::vector<RunRecord> records);

/// Mean and standard error of kld(b) - kld(a) over runs that succeeded for both.
struct PairedGap {
  double mean = 0.0;
  double se = 0.0;
  int runs = 0;
};
PairedGap paired_kld_gap(const EvalReport& a, const EvalReport& b);

enum class SweepMetric { kld, rmse };

struct SweepResult {
  std::vector<int> values;
  std::vector<EvalReport> reports;
  std::size_t best = 0;  ///< index of the ensemble minimizer (ties to the first)
};

/// Sweeps the AR order (ar, ars, sar) or the bandwidth (lw) over `values`
/// and picks the ensemble minimizer of the chosen metric.
SweepResult sweep_parameter(const MonteCarloSetup& setup, const EstimatorConfig& base, const std::vector<int>& values,
                            const TruthGrid& truth, SweepMetric metric = SweepMetric::kld);

}  // namespace qcspec
