#include "qcspec/line_search.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "qcspec/error.hpp"

namespace qcspec {

namespace {

double finite_or_inf(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

}  // namespace

std::size_t argmin_first(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[best] || (std::isnan(values[best]) && !std::isnan(values[i]))) best = i;
  return best;
}

ScalarMinimum minimize_log_scale(const std::function<double(double)>& f, const LambdaSearch& search) {
  if (!(search.lo > 0.0) || !(search.hi > search.lo) || search.coarse_points < 2)
    throw_input("invalid search bracket");
  const double log_lo = std::log(search.lo);
  const double log_hi = std::log(search.hi);
  const int m = search.coarse_points;
  const double step = (log_hi - log_lo) / (m - 1);

  std::vector<double> grid(m), values(m);
  for (int i = 0; i < m; ++i) {
    grid[i] = log_lo + i * step;
    values[i] = finite_or_inf(f(std::exp(grid[i])));
  }
  const int best = static_cast<int>(argmin_first(values));
  if (!std::isfinite(values[best])) throw_estimation("objective is not finite anywhere on the search bracket");

  double a = grid[best > 0 ? best - 1 : 0];
  double b = grid[best < m - 1 ? best + 1 : m - 1];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double tol = std::log1p(search.rel_tol);

  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = finite_or_inf(f(std::exp(c)));
  double fd = finite_or_inf(f(std::exp(d)));
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = finite_or_inf(f(std::exp(c)));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = finite_or_inf(f(std::exp(d)));
    }
  }
  ScalarMinimum out{std::exp(grid[best]), values[best]};
  const double mid = 0.5 * (a + b);
  const double fmid = finite_or_inf(f(std::exp(mid)));
  if (fmid < out.f) out = {std::exp(mid), fmid};
  if (fc < out.f) out = {std::exp(c), fc};
  if (fd < out.f) out = {std::exp(d), fd};
  return out;
}

}  // namespace qcspec
