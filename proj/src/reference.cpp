#include "qcspec/reference.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace qcspec::reference {

Eigen::MatrixXd acf_naive(const Eigen::MatrixXd& u, int maxlag) {
  const Eigen::Index n = u.rows();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(maxlag + 1, u.cols());
  for (Eigen::Index l = 0; l < u.cols(); ++l)
    for (int tau = 0; tau <= maxlag; ++tau) {
      double acc = 0.0;
      for (Eigen::Index t = tau; t < n; ++t) acc += u(t, l) * u(t - tau, l);
      r(tau, l) = acc / static_cast<double>(n);
    }
  return r;
}

Eigen::MatrixXd lag_window_naive(const Eigen::MatrixXd& r, int bandwidth, std::span<const double> freqs) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(freqs.size()), r.cols());
  for (std::size_t k = 0; k < freqs.size(); ++k)
    for (Eigen::Index l = 0; l < r.cols(); ++l) {
      std::complex<double> acc = 0.0;
      for (int tau = -bandwidth; tau <= bandwidth; ++tau) {
        const double x = static_cast<double>(tau) / bandwidth;
        const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * x));
        acc += w * r(std::abs(tau), l) * std::polar(1.0, -freqs[k] * tau);
      }
      s(static_cast<Eigen::Index>(k), l) = acc.real();
    }
  return s;
}

Eigen::MatrixXd ar_spectrum_naive(const Eigen::MatrixXd& coeffs, const Eigen::VectorXd& sigma2,
                                  std::span<const double> freqs) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(freqs.size()), coeffs.cols());
  for (std::size_t k = 0; k < freqs.size(); ++k)
    for (Eigen::Index l = 0; l < coeffs.cols(); ++l) {
      std::complex<double> den = 1.0;
      for (Eigen::Index j = 1; j <= coeffs.rows(); ++j)
        den -= coeffs(j - 1, l) * std::polar(1.0, -static_cast<double>(j) * freqs[k]);
      s(static_cast<Eigen::Index>(k), l) = sigma2[l] / std::norm(den);
    }
  return s;
}

}  // namespace qcspec::reference
