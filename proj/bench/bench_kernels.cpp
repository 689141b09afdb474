// OpenMP kernels against their serial reference versions, plus the two
// estimator hot paths. Run with --benchmark_filter to select a family.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "qcspec/estimators.hpp"
#include "qcspec/kernels.hpp"
#include "qcspec/reference.hpp"
#include "qcspec/simulate.hpp"

using namespace qcspec;

namespace {

const QcsMatrix& crossings(Eigen::Index n) {
  static std::vector<std::pair<Eigen::Index, QcsMatrix>> cache;
  for (const auto& [len, q] : cache)
    if (len == n) return q;
  cache.emplace_back(n, qcser(generate(SimSpec{1, n, 2024, 1000}), QuantileGrid::standard()));
  return cache.back().second;
}

Eigen::MatrixXd random_coeffs(int p, Eigen::Index levels) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> d(-0.05, 0.05);
  Eigen::MatrixXd a(p, levels);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = d(gen);
  return a;
}

void BM_AcfNaive(benchmark::State& state) {
  const QcsMatrix& q = crossings(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::acf_naive(q.u, 64));
}

void BM_AcfDirect(benchmark::State& state) {
  const QcsMatrix& q = crossings(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::acf_direct(q.u, 64));
}

void BM_AcfFft(benchmark::State& state) {
  const QcsMatrix& q = crossings(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::acf_fft(q.u, 64));
}

void BM_LagWindowNaive(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::MatrixXd r = kernels::acf_direct(crossings(n).u, 64);
  const std::vector<double> freqs = fourier_frequencies(n);
  for (auto _ : state) benchmark::DoNotOptimize(reference::lag_window_naive(r, 64, freqs));
}

void BM_LagWindow(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::MatrixXd r = kernels::acf_direct(crossings(n).u, 64);
  const std::vector<double> freqs = fourier_frequencies(n);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::lag_window_sum(r, 64, freqs));
}

void BM_ArSpectrumNaive(benchmark::State& state) {
  const Eigen::MatrixXd a = random_coeffs(static_cast<int>(state.range(0)), 91);
  const Eigen::VectorXd s2 = Eigen::VectorXd::Ones(91);
  const std::vector<double> freqs = fourier_frequencies(1024);
  for (auto _ : state) benchmark::DoNotOptimize(reference::ar_spectrum_naive(a, s2, freqs));
}

void BM_ArSpectrum(benchmark::State& state) {
  const Eigen::MatrixXd a = random_coeffs(static_cast<int>(state.range(0)), 91);
  const Eigen::VectorXd s2 = Eigen::VectorXd::Ones(91);
  const std::vector<double> freqs = fourier_frequencies(1024);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::ar_spectrum(a, s2, freqs));
}

void BM_SpecSar(benchmark::State& state) {
  const QcsMatrix& q = crossings(state.range(0));
  const SplineBasis basis = SplineBasis::for_levels(q.alphas);
  for (auto _ : state) benchmark::DoNotOptimize(sar_fit(q, basis));
}

void BM_SpecArs(benchmark::State& state) {
  const QcsMatrix& q = crossings(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(spec_ars(q));
}

}  // namespace

BENCHMARK(BM_AcfNaive)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AcfDirect)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AcfFft)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LagWindowNaive)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LagWindow)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ArSpectrumNaive)->Arg(2)->Arg(12)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ArSpectrum)->Arg(2)->Arg(12)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SpecSar)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpecArs)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
