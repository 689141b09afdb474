#pragma once

// Univariate and bivariate standard normal distribution functions.

namespace qcspec {

double normal_cdf(double x);
double normal_quantile(double p);

/// P(X <= h, Y <= k) for a standard bivariate normal pair with correlation rho.
/// Uses Genz's (2004) Gauss-Legendre scheme on the Drezner-Wesolowsky
/// integral form, with 6, 12 or 20 nodes depending on |rho|; absolute accuracy
/// is about 1e-15. Throws for |rho| >= 1.
double bvn_cdf(double h, double k, double rho);

}  // namespace qcspec
