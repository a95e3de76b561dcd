#pragma once

namespace ffm {

// Regularized lower incomplete gamma function P(a, x) = gamma(a, x) / Gamma(a)
// for a > 0, x >= 0. Series expansion for x < a + 1, continued fraction
// otherwise; accurate to ~1e-14 relative. Throws std::domain_error outside
// the domain.
double reg_lower_gamma(double a, double x);

// log Gamma(a) for a > 0 (thread-safe).
double log_gamma(double a);

// Density of Gamma(shape a, rate b) at x.
double gamma_pdf(double x, double a, double b);

} // namespace ffm
