#pragma once

namespace dpcopula {

double normal_cdf(double x);
/// Inverse of normal_cdf on (0, 1); returns -inf / +inf at 0 / 1.
double normal_quantile(double p);
double normal_pdf(double x);

/// Standard bivariate normal density with correlation rho. Throws ConfigError unless |rho| < 1.
double binormal_pdf(double y1, double y2, double rho);

/// P(Y1 > h, Y2 > k) for a standard bivariate normal with correlation rho in [-1, 1].
/// Genz's BVNU: Gauss-Legendre quadrature of the Drezner-Wesolowsky integral, with the
/// asymptotic expansion for |rho| >= 0.925. Absolute accuracy about 1e-15.
double upper_orthant_probability(double h, double k, double rho);

}  // namespace dpcopula
