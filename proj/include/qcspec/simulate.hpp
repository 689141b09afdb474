#pragma once

// Test processes and ground-truth quantile-crossing spectra.
//
//   case 1  AR(2) y_t = 2d cos(2 pi f0) y_{t-1} - d^2 y_{t-2} + e_t, d = 0.9, f0 = 0.2
//   case 2  nonlinear mixture of three unit-variance AR processes
//   case 3  stochastic volatility y_t = e3_t exp(xi3_{t-1})

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qcspec/estimators.hpp"
#include "qcspec/series.hpp"

namespace qcspec {

struct SimSpec {
  int case_id = 1;
  Eigen::Index n = 512;
  std::uint64_t seed = 0;
  Eigen::Index burn_in = 1000;

  /// Throws unless case_id in {1,2,3}, n >= 64 and burn_in >= 500.
  void validate() const;
};

/// a1 = 2 d cos(2 pi f0), a2 = -d^2.
std::array<double, 2> case1_coefficients();
/// Mixing weights of case 2.
double mix_w1(double x);
double mix_w2(double x);
/// Innovation variance giving unit stationary variance.
double ar1_innovation_variance(double a);
double ar2_innovation_variance(double a1, double a2);

TimeSeries generate(const SimSpec& spec);

/// Component paths xi_1, xi_2, xi_3 of case 2 (columns), after burn-in.
Eigen::MatrixXd case2_components(const SimSpec& spec);

/// Autocorrelations rho(0..maxlag) of a stationary AR process with the given
/// coefficients. Throws if the process is not stable.
std::vector<double> ar_autocorrelation(std::span<const double> coeffs, int maxlag);

/// Largest modulus of the roots of z^p - a_1 z^{p-1} - ... - a_p.
double ar_spectral_radius(std::span<const double> coeffs);

enum class TruthProvenance { semi_analytic, monte_carlo };

struct TruthGrid {
  SpectrumGrid grid;
  TruthProvenance provenance = TruthProvenance::semi_analytic;
  Eigen::MatrixXd se;             ///< per-cell standard errors (Monte Carlo only)
  double truncation_bound = 0.0;  ///< bound on sum_{|tau| > maxlag} |R(tau, alpha)| (semi-analytic only)
  Eigen::MatrixXd acf;            ///< averaged crossing autocovariances (Monte Carlo only)
  Eigen::MatrixXd acf_se;
};

/// (maxlag+1) x L crossing autocovariances R(tau, alpha) = Phi2(z, z; rho(tau)) - alpha^2
/// of a Gaussian AR process, with R(0, alpha) = alpha (1 - alpha).
Eigen::MatrixXd gaussian_crossing_acf(std::span<const double> coeffs, const QuantileGrid& alphas, int maxlag);

/// Gaussian AR truth: R(tau, alpha) = Phi2(z, z; rho(tau)) - alpha^2 with
/// z = Phi^{-1}(alpha), transformed by a truncated Fourier sum over |tau| <= maxlag.
/// Requires |rho| < 1e-8 over the last p lags before maxlag.
TruthGrid truth_gaussian(std::span<const double> coeffs, const QuantileGrid& alphas, int maxlag,
                         std::span<const double> freqs);

/// Default truncation lag for truth_gaussian.
constexpr int kTruthMaxlag = 400;

/// Population quantiles estimated from one draw of `draws` samples (stream
/// independent of every replication stream).
std::vector<double> population_quantiles(int case_id, const QuantileGrid& alphas, std::uint64_t seed,
                                         Eigen::Index draws = 10'000'000);

struct McTruthOptions {
  Eigen::Index n_long = Eigen::Index{1} << 17;
  int reps = 8;
  Eigen::Index quantile_draws = 10'000'000;
};

/// Monte Carlo truth: crossing autocovariances against fixed population
/// quantiles, averaged over reps realizations of length n_long, then a
/// Tukey-Hanning lag window with bandwidth maxlag. se is the across-rep
/// standard deviation of the per-rep estimate divided by sqrt(reps).
TruthGrid truth_mc(const SimSpec& spec, const QuantileGrid& alphas, int maxlag, std::span<const double> freqs,
                   const McTruthOptions& options = {});

/// Bandwidth used by truth_mc unless told otherwise.
constexpr int kTruthBandwidth = 512;

/// Semi-analytic truth for case 1, Monte Carlo truth for cases 2 and 3, on the
/// Fourier grid of n.
TruthGrid default_truth(int case_id, Eigen::Index n, const QuantileGrid& alphas, std::uint64_t seed = 0,
                        const McTruthOptions& options = {});

}  // namespace qcspec
