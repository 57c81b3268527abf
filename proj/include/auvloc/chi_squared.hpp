#pragma once

namespace auvloc {

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

double chi_squared_cdf(double x, double dof);

/// Inverse of chi_squared_cdf by bisection; p in (0, 1).
double chi_squared_quantile(double p, double dof);

}  // namespace auvloc
