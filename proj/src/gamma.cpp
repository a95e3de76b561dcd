#include "ffmkit/gamma.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ffm {

namespace {

constexpr double kEps = 1e-16;
// Shapes can be huge (utility uses alpha = beta*c + 1 with beta up to 1e6);
// near x ~ a the series needs O(sqrt(a)) terms, so the cap is generous.
constexpr long kMaxIter = 4'000'000;

// P(a,x) by series: gamma(a,x) = x^a e^-x sum_n x^n Gamma(a)/Gamma(a+1+n)
double lower_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (long n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps)
            return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
    }
    throw std::runtime_error("reg_lower_gamma: series did not converge");
}

// Q(a,x) by modified Lentz continued fraction
double upper_cf(double a, double x) {
    const double tiny = std::numeric_limits<double>::min() / kEps;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (long i = 1; i < kMaxIter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps)
            return h * std::exp(-x + a * std::log(x) - log_gamma(a));
    }
    throw std::runtime_error("reg_lower_gamma: continued fraction did not converge");
}

} // namespace

double log_gamma(double a) {
#if defined(__GLIBC__) || defined(__APPLE__)
    int sign = 0;
    return lgamma_r(a, &sign);
#else
    return std::lgamma(a);
#endif
}

double reg_lower_gamma(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a) || !std::isfinite(x))
        throw std::domain_error("reg_lower_gamma: need a > 0 and x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return lower_series(a, x);
    return 1.0 - upper_cf(a, x);
}

double gamma_pdf(double x, double a, double b) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return a < 1.0 ? std::numeric_limits<double>::infinity()
                                 : (a == 1.0 ? b : 0.0);
    return std::exp(a * std::log(b) + (a - 1.0) * std::log(x) - b * x - log_gamma(a));
}

} // namespace ffm
