#pragma once

// Straightforward serial implementations of the kernels in kernels.hpp.
// They are slow on purpose and exist for tests and benchmarks.

#include <span>

#include <Eigen/Dense>

namespace qcspec::reference {

Eigen::MatrixXd acf_naive(const Eigen::MatrixXd& u, int maxlag);

/// Complex exponential double sum over tau = -M..M; real part returned.
Eigen::MatrixXd lag_window_naive(const Eigen::MatrixXd& r, int bandwidth, std::span<const double> freqs);

/// sigma2 / |1 - sum_j a_j e^{-ijw}|^2 with each exponential formed by std::polar.
Eigen::MatrixXd ar_spectrum_naive(const Eigen::MatrixXd& coeffs, const Eigen::VectorXd& sigma2,
                                  std::span<const double> freqs);

}  // namespace qcspec::reference
