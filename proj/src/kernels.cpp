#include "qcspec/kernels.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "qcspec/error.hpp"

namespace qcspec::kernels {

namespace {

// FFTW's planner is not reentrant.
std::mutex fftw_planner_mutex;

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {}
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

struct FftwPlan {
  fftw_plan plan = nullptr;
  ~FftwPlan() {
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex);
      fftw_destroy_plan(plan);
    }
  }
};

constexpr long kParallelThreshold = 1 << 14;

}  // namespace

double tukey_hanning(double x) noexcept {
  const double ax = std::abs(x);
  if (ax > 1.0) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * ax));
}

Eigen::MatrixXd acf_direct(const Eigen::MatrixXd& u, int maxlag) {
  const Eigen::Index n = u.rows();
  const Eigen::Index cols = u.cols();
  if (maxlag < 0 || maxlag >= n) throw_input("maxlag must satisfy 0 <= maxlag < n");
  Eigen::MatrixXd r(maxlag + 1, cols);
  const long work = static_cast<long>(n) * (maxlag + 1) * cols;
  const double inv_n = 1.0 / static_cast<double>(n);
#pragma omp parallel for collapse(2) schedule(dynamic) if (work > kParallelThreshold)
  for (Eigen::Index l = 0; l < cols; ++l) {
    for (int tau = 0; tau <= maxlag; ++tau) {
      const double* col = u.col(l).data();
      double acc = 0.0;
      for (Eigen::Index t = tau; t < n; ++t) acc += col[t] * col[t - tau];
      r(tau, l) = acc * inv_n;
    }
  }
  return r;
}

Eigen::MatrixXd acf_fft(const Eigen::MatrixXd& u, int maxlag) {
  const Eigen::Index n = u.rows();
  const Eigen::Index cols = u.cols();
  if (maxlag < 0 || maxlag >= n) throw_input("maxlag must satisfy 0 <= maxlag < n");
  std::size_t nfft = 1;
  while (nfft < static_cast<std::size_t>(n + maxlag + 1)) nfft <<= 1;
  const std::size_t nc = nfft / 2 + 1;

  FftwPlan forward, backward;
  {
    FftwBuffer real_buf(sizeof(double) * nfft);
    FftwBuffer cplx_buf(sizeof(fftw_complex) * nc);
    auto* re = static_cast<double*>(real_buf.ptr);
    auto* cx = static_cast<fftw_complex*>(cplx_buf.ptr);
    std::lock_guard lock(fftw_planner_mutex);
    // FFTW_ESTIMATE keeps the chosen algorithm, and hence the bits, fixed.
    forward.plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), re, cx, FFTW_ESTIMATE);
    backward.plan = fftw_plan_dft_c2r_1d(static_cast<int>(nfft), cx, re, FFTW_ESTIMATE);
  }

  Eigen::MatrixXd r(maxlag + 1, cols);
  const double scale = 1.0 / (static_cast<double>(nfft) * static_cast<double>(n));
#pragma omp parallel if (cols > 1)
  {
    FftwBuffer real_buf(sizeof(double) * nfft);
    FftwBuffer cplx_buf(sizeof(fftw_complex) * nc);
    auto* re = static_cast<double*>(real_buf.ptr);
    auto* cx = static_cast<fftw_complex*>(cplx_buf.ptr);
#pragma omp for schedule(static)
    for (Eigen::Index l = 0; l < cols; ++l) {
      for (Eigen::Index t = 0; t < n; ++t) re[t] = u(t, l);
      for (std::size_t t = static_cast<std::size_t>(n); t < nfft; ++t) re[t] = 0.0;
      fftw_execute_dft_r2c(forward.plan, re, cx);
      for (std::size_t k = 0; k < nc; ++k) {
        cx[k][0] = cx[k][0] * cx[k][0] + cx[k][1] * cx[k][1];
        cx[k][1] = 0.0;
      }
      fftw_execute_dft_c2r(backward.plan, cx, re);
      for (int tau = 0; tau <= maxlag; ++tau) r(tau, l) = re[tau] * scale;
    }
  }
  return r;
}

Eigen::MatrixXd lag_window_sum(const Eigen::MatrixXd& r, int bandwidth, std::span<const double> freqs) {
  if (bandwidth <= 0) throw_input("bandwidth must be positive");
  if (r.rows() < bandwidth + 1) throw_input("bandwidth exceeds maxlag of the autocovariances");
  const Eigen::Index cols = r.cols();
  const auto nf = static_cast<Eigen::Index>(freqs.size());
  std::vector<double> weights(bandwidth + 1);
  for (int tau = 0; tau <= bandwidth; ++tau) weights[tau] = tukey_hanning(static_cast<double>(tau) / bandwidth);

  Eigen::MatrixXd s(nf, cols);
  const long work = static_cast<long>(nf) * bandwidth * cols;
#pragma omp parallel if (work > kParallelThreshold)
  {
    std::vector<double> kernel(bandwidth + 1);
#pragma omp for schedule(static)
    for (Eigen::Index k = 0; k < nf; ++k) {
      for (int tau = 1; tau <= bandwidth; ++tau) kernel[tau] = 2.0 * weights[tau] * std::cos(freqs[k] * tau);
      for (Eigen::Index l = 0; l < cols; ++l) {
        double acc = weights[0] * r(0, l);
        for (int tau = 1; tau <= bandwidth; ++tau) acc += kernel[tau] * r(tau, l);
        s(k, l) = acc;
      }
    }
  }
  return s;
}

Eigen::MatrixXd ar_spectrum(const Eigen::MatrixXd& coeffs, const Eigen::VectorXd& sigma2,
                            std::span<const double> freqs) {
  const Eigen::Index p = coeffs.rows();
  const Eigen::Index cols = coeffs.cols();
  if (sigma2.size() != cols) throw_input("coefficient and variance dimensions differ");
  const auto nf = static_cast<Eigen::Index>(freqs.size());
  Eigen::MatrixXd s(nf, cols);
  bool near_unit_root = false;
  const long work = static_cast<long>(nf) * (p + 1) * cols;
#pragma omp parallel for schedule(static) if (work > kParallelThreshold)
  for (Eigen::Index k = 0; k < nf; ++k) {
    const std::complex<double> z = std::polar(1.0, -freqs[k]);
    for (Eigen::Index l = 0; l < cols; ++l) {
      std::complex<double> poly = 0.0;
      for (Eigen::Index j = p; j >= 1; --j) poly = (poly + coeffs(j - 1, l)) * z;
      const std::complex<double> den = 1.0 - poly;
      const double mag = std::abs(den);
      if (mag < 1e-12) {
#pragma omp atomic write
        near_unit_root = true;
      }
      s(k, l) = sigma2[l] / (mag * mag);
    }
  }
  if (near_unit_root) throw_estimation("near-unit-root spectrum");
  return s;
}

}  // namespace qcspec::kernels
