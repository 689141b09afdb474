#pragma once

// Data-parallel inner loops. Every kernel writes each output cell from exactly
// one loop iteration and performs its sums in a fixed order, so results do not
// depend on the OpenMP thread count. Serial counterparts used as test oracles
// live in reference.hpp.

#include <span>

#include <Eigen/Dense>

namespace qcspec::kernels {

/// Tukey-Hanning lag window 0.5 (1 + cos(pi x)) on |x| <= 1, zero outside.
double tukey_hanning(double x) noexcept;

/// Column-wise autocovariances, divisor n, lags 0..maxlag, direct summation.
Eigen::MatrixXd acf_direct(const Eigen::MatrixXd& u, int maxlag);

/// Same quantity through a zero-padded real FFT; O(n log n) per column.
Eigen::MatrixXd acf_fft(const Eigen::MatrixXd& u, int maxlag);

/// S(w, l) = sum_{|tau| <= M} w(tau/M) r(|tau|, l) cos(w tau) for each frequency.
/// r must have at least M+1 rows.
Eigen::MatrixXd lag_window_sum(const Eigen::MatrixXd& r, int bandwidth, std::span<const double> freqs);

/// S(w, l) = sigma2(l) / |1 - sum_j a(j, l) exp(-i j w)|^2, evaluated with
/// Horner's rule. Throws if |1 - A(w)| < 1e-12 anywhere.
Eigen::MatrixXd ar_spectrum(const Eigen::MatrixXd& coeffs, const Eigen::VectorXd& sigma2,
                            std::span<const double> freqs);

}  // namespace qcspec::kernels
