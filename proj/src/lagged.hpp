#pragma once

// Lagged-regression building blocks shared by the AR and SAR fits.

#include <Eigen/Dense>

namespace qcspec::lagged {

/// Regression of u_t on (u_{t-1}, ..., u_{t-p}) over t = start..n-1 (0-based).
struct Moments {
  Eigen::MatrixXd cross;   ///< U'U
  Eigen::VectorXd target;  ///< U'u
  double yy = 0.0;         ///< u'u
};

Eigen::MatrixXd design(const double* col, Eigen::Index n, int p, Eigen::Index start);
Moments moments(const double* col, Eigen::Index n, int p, Eigen::Index start);

}  // namespace qcspec::lagged
