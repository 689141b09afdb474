#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace qcspec {

/// Index of the smallest value; ties go to the lowest index. NaN never wins.
std::size_t argmin_first(std::span<const double> values);

/// Options for the log-spaced-scan-then-golden-section search.
struct LambdaSearch {
  double lo = 1e-9;
  double hi = 1e3;
  int coarse_points = 25;
  double rel_tol = 1e-4;
};

struct ScalarMinimum {
  double x = 0.0;
  double f = 0.0;
};

/// Minimizes f over [lo, hi] on a log scale: a coarse scan of coarse_points
/// log-spaced values (ties go to the smaller x), then golden-section search in
/// log x between the neighbours of the best scan point until the bracket's
/// relative width drops below rel_tol. Non-finite f values are treated as +inf.
/// The returned point is never worse than the best scan point.
ScalarMinimum minimize_log_scale(const std::function<double(double)>& f, const LambdaSearch& search = {});

}  // namespace qcspec
