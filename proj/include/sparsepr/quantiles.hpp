#pragma once

namespace sparsepr {

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse standard normal CDF, absolute accuracy better than 1e-9 on (0, 1).
double normal_quantile(double q);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed without cancellation.
double gamma_q(double a, double x);

/// Inverse chi-square CDF with df degrees of freedom, relative accuracy 1e-8.
double chi_sq_quantile(double q, int df);

}  // namespace sparsepr
