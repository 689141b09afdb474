#pragma once

// Shared helpers for the test suites.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qcspec/series.hpp"

namespace qcspec::testing {

inline std::vector<double> gaussian_ar1(std::size_t n, double a, std::uint64_t seed, std::size_t burn = 500) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  std::vector<double> y(n);
  double x = 0.0;
  for (std::size_t t = 0; t < n + burn; ++t) {
    x = a * x + d(gen);
    if (t >= burn) y[t - burn] = x;
  }
  return y;
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  std::vector<double> y(n);
  for (auto& v : y) v = d(gen);
  return y;
}

inline std::vector<double> uniform_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d;
  std::vector<double> y(n);
  for (auto& v : y) v = d(gen);
  return y;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace qcspec::testing
