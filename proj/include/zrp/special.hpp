#pragma once

#include <cmath>
#include <cstdint>

namespace zrp {

// log Gamma(x), x > 0.  std::lgamma is a Lanczos-class implementation with
// relative error well below 1e-13 on the positive axis, which is what the
// closed-form tail evaluations require.
inline double log_gamma(double x) { return std::lgamma(x); }

// log Gamma(z + a) - log Gamma(z) without the cancellation that plain lgamma
// differences suffer at large z (their absolute error grows like z log z eps).
double log_gamma_ratio(double z, double a);

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// Regularized lower incomplete gamma P(a,x); Q(a,x) = 1 - P(a,x).
// Series for x < a+1, continued fraction otherwise (Press et al. style).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with dof degrees of freedom.
inline double chi_square_sf(double x, double dof) { return gamma_q(0.5 * dof, 0.5 * x); }

// Kolmogorov distribution survival function:
// P(sup|B(t)| adjusted statistic > lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_sf(double lambda);

// KS test p-value for n samples and observed sup-distance d (asymptotic form
// with the Stephens small-sample correction).
double ks_p_value(double d, std::size_t n);

// log of binomial coefficient via log-gamma.
inline double log_binomial(double n, double k) {
    return log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0);
}

// numerically stable log(exp(a) + exp(b))
inline double log_add_exp(double a, double b) {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(-(a > b ? a - b : b - a)));
}

}  // namespace zrp
