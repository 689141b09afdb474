#include <numbers>
#include <sstream>

#include "qcspec/error.hpp"
#include "qcspec/estimators.hpp"
#include "qcspec/kernels.hpp"

namespace qcspec {

void SpectrumGrid::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta)
    if (k == key) {
      v = value;
      return;
    }
  meta.emplace_back(key, value);
}

std::optional<std::string> SpectrumGrid::find_meta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return std::nullopt;
}

std::vector<double> fourier_frequencies(Eigen::Index n) {
  std::vector<double> freqs;
  for (Eigen::Index k = 1; k <= (n - 1) / 2; ++k)
    freqs.push_back(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  return freqs;
}

void normalize_columns(Eigen::MatrixXd& s, const QuantileGrid& alphas) {
  for (Eigen::Index l = 0; l < s.cols(); ++l) s.col(l) /= alphas[l] * (1.0 - alphas[l]);
}

namespace {

std::string to_string_exact(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

SpectrumGrid make_grid(std::span<const double> freqs, const QuantileGrid& alphas, Eigen::MatrixXd s,
                       bool normalized) {
  SpectrumGrid g;
  g.freqs.assign(freqs.begin(), freqs.end());
  g.alphas = alphas;
  g.s = std::move(s);
  if (normalized) normalize_columns(g.s, alphas);
  g.normalized = normalized;
  return g;
}

}  // namespace

SpectrumGrid spec_lw(const QAcf& acf, int bandwidth, bool normalized) {
  if (bandwidth <= 0) throw_input("bandwidth must be positive");
  if (bandwidth > acf.maxlag) throw_input("bandwidth M exceeds maxlag");
  const std::vector<double> freqs = fourier_frequencies(acf.n);
  SpectrumGrid g = make_grid(freqs, acf.alphas, kernels::lag_window_sum(acf.r, bandwidth, freqs), normalized);
  g.n = acf.n;
  g.set_meta("estimator", "lw");
  g.set_meta("M", std::to_string(bandwidth));
  return g;
}

SpectrumGrid eval_spectrum(const ArFit& fit, std::span<const double> freqs, bool normalized) {
  SpectrumGrid g = make_grid(freqs, fit.alphas, kernels::ar_spectrum(fit.coeffs, fit.sigma2, freqs), normalized);
  g.set_meta("estimator", "ar");
  g.set_meta("p", std::to_string(fit.p));
  g.set_meta("method", fit.method == ArMethod::least_squares ? "ls" : "yw");
  return g;
}

SpectrumGrid eval_spectrum(const ArsModel& model, std::span<const double> freqs, const QuantileGrid& alphas,
                           bool normalized) {
  const auto levels = static_cast<Eigen::Index>(alphas.size());
  Eigen::MatrixXd coeffs(model.p, levels);
  Eigen::VectorXd sigma2(levels);
  for (Eigen::Index l = 0; l < levels; ++l) {
    coeffs.col(l) = model.coefficients_at(alphas[l]);
    sigma2[l] = model.sigma2_at(alphas[l]);
  }
  SpectrumGrid g = make_grid(freqs, alphas, kernels::ar_spectrum(coeffs, sigma2, freqs), normalized);
  g.set_meta("estimator", "ars");
  g.set_meta("p", std::to_string(model.p));
  g.set_meta("K", std::to_string(model.basis.size()));
  return g;
}

SpectrumGrid eval_spectrum(const SarModel& model, std::span<const double> freqs, const QuantileGrid& alphas,
                           bool normalized) {
  const auto levels = static_cast<Eigen::Index>(alphas.size());
  Eigen::MatrixXd coeffs(model.p, levels);
  Eigen::VectorXd sigma2(levels);
  for (Eigen::Index l = 0; l < levels; ++l) {
    coeffs.col(l) = model.coefficients_at(alphas[l]);
    sigma2[l] = model.sigma2_at(alphas[l]);
  }
  SpectrumGrid g = make_grid(freqs, alphas, kernels::ar_spectrum(coeffs, sigma2, freqs), normalized);
  g.set_meta("estimator", "sar");
  g.set_meta("p", std::to_string(model.p));
  g.set_meta("K", std::to_string(model.basis.size()));
  g.set_meta("lambda", to_string_exact(model.lambda));
  return g;
}

}  // namespace qcspec
