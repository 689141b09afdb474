#include "qcspec/series.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qcspec/error.hpp"
#include "qcspec/kernels.hpp"

namespace qcspec {

TimeSeries::TimeSeries(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i])) throw_input("non-finite value at index " + std::to_string(i));
}

void TimeSeries::require_estimable() const {
  if (values_.size() < 8) throw_input("series too short: need n >= 8");
}

QuantileGrid::QuantileGrid(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw_input("empty quantile grid");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const double a = levels_[i];
    if (!(a > 0.0 && a < 1.0)) throw_input("invalid level");
    if (i > 0 && !(a > levels_[i - 1])) throw_input("quantile levels must be strictly increasing");
  }
}

QuantileGrid QuantileGrid::uniform(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw_input("invalid level range");
  std::vector<double> levels;
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (long i = 0; i < count; ++i) levels.push_back(std::round((lo + i * step) * 1e12) / 1e12);
  return QuantileGrid(std::move(levels));
}

QuantileGrid QuantileGrid::standard() {
  std::vector<double> levels;
  for (int i = 5; i <= 95; ++i) levels.push_back(i / 100.0);
  return QuantileGrid(std::move(levels));
}

std::size_t quantile_rank(std::size_t n, double alpha) {
  const double x = static_cast<double>(n) * alpha;
  const double nearest = std::round(x);
  double k = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::ceil(x);
  k = std::clamp(k, 1.0, static_cast<double>(n));
  return static_cast<std::size_t>(k);
}

double sample_quantile(std::span<const double> y, double alpha) {
  if (y.empty()) throw_input("empty input");
  if (!(alpha > 0.0 && alpha < 1.0)) throw_input("invalid level");
  std::vector<double> work(y.begin(), y.end());
  const std::size_t k = quantile_rank(work.size(), alpha);
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k - 1), work.end());
  return work[k - 1];
}

QcsMatrix qcser_at(const TimeSeries& y, const QuantileGrid& alphas, std::span<const double> quantiles) {
  if (quantiles.size() != alphas.size()) throw_input("quantile count does not match level count");
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto levels = static_cast<Eigen::Index>(alphas.size());
  QcsMatrix out;
  out.u.resize(n, levels);
  out.alphas = alphas;
  out.qhat.assign(quantiles.begin(), quantiles.end());
  const auto v = y.values();
  for (Eigen::Index l = 0; l < levels; ++l) {
    const double a = alphas[l];
    const double q = quantiles[l];
    for (Eigen::Index t = 0; t < n; ++t) out.u(t, l) = v[t] <= q ? a - 1.0 : a;
  }
  return out;
}

QcsMatrix qcser(const TimeSeries& y, const QuantileGrid& alphas) {
  if (y.size() == 0) throw_input("empty input");
  std::vector<double> sorted(y.values().begin(), y.values().end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> q(alphas.size());
  for (std::size_t l = 0; l < alphas.size(); ++l) q[l] = sorted[quantile_rank(sorted.size(), alphas[l]) - 1];
  return qcser_at(y, alphas, q);
}

QAcf qacf(const QcsMatrix& qcs, int maxlag) {
  if (maxlag < 0 || maxlag >= qcs.n()) throw_input("maxlag must satisfy 0 <= maxlag < n");
  QAcf out;
  out.maxlag = maxlag;
  out.n = qcs.n();
  out.alphas = qcs.alphas;
  // Direct sums are exact-order and fast for the short lags used by the
  // estimators; long lag ranges on long series go through the FFT.
  const bool use_fft = maxlag > 64 && qcs.n() > 4096;
  out.r = use_fft ? kernels::acf_fft(qcs.u, maxlag) : kernels::acf_direct(qcs.u, maxlag);
  return out;
}

}  // namespace qcspec
