#pragma once

// Scalar special functions used across the library: log-gamma (Lanczos),
// digamma/trigamma, regularized incomplete gamma, normal distribution
// functions and chi-square tail probabilities.

namespace gamlss {

/// log Gamma(x) for x > 0, Lanczos approximation, |rel err| < 1e-12.
double log_gamma(double x);

/// Digamma psi(x) for x > 0.
double digamma(double x);

/// Trigamma psi'(x) for x > 0.
double trigamma(double x);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Standard normal CDF.
double norm_cdf(double z);

/// log of the standard normal CDF, stable for z << 0.
double log_norm_cdf(double z);

/// Standard normal density.
double norm_pdf(double z);

/// Standard normal quantile, rational approximation plus one Halley
/// refinement; |error| < 1e-12 on (0, 1).
double norm_quantile(double p);

/// Upper tail of the chi-square distribution with df degrees of freedom.
double chisq_upper_tail(double x, double df);

} // namespace gamlss
