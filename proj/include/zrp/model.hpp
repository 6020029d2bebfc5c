#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "zrp/types.hpp"

namespace zrp {

// Two families of zero-range jump rates, both with unit critical fugacity:
//   PowerLaw:  g(k) = 1 + b/k        (b > 2 so the critical density is finite)
//   Stretched: g(k) = 1 + beta/k^lambda, lambda in (1/2, 1), beta > 0
enum class RateFamily { PowerLaw, Stretched };

struct ModelParams {
    RateFamily family = RateFamily::PowerLaw;
    double b = 4.0;
    double beta = 1.0;
    double lambda = 0.75;

    static constexpr double phi_c = 1.0;

    static ModelParams power_law(double b_exponent);
    static ModelParams stretched(double beta_amplitude, double lambda_exponent);

    void validate() const;            // throws std::domain_error on bad parameters
    std::string cache_key() const;    // stable identifier for table caches
    bool operator==(const ModelParams& o) const;
};

double jump_rate(const ModelParams& params, std::int64_t k);

// Closed-form constants of the critical single-site measure.
// sigma2 is +infinity when the variance diverges (PowerLaw with b <= 3).
struct CriticalConstants {
    double Z_c = 0.0;
    double rho_c = 0.0;
    double sigma2 = 0.0;
};

CriticalConstants critical_constants(const ModelParams& params);

// Independent route to the same constants: direct series summation with
// telescoped tail corrections derived from the weight recursion (PowerLaw)
// or a bounded truncation (Stretched).  Used to cross-check the closed forms.
CriticalConstants critical_constants_series(const ModelParams& params);

// Critical single-site distribution W(k), its cdf and tail, in both natural
// and log scale.  Immutable after construction; share freely across threads.
struct WeightTable {
    ModelParams params;
    std::int64_t kmax = 0;
    std::vector<double> logw;  // log W(k), k = 0..kmax
    std::vector<double> w;     // W(k)
    std::vector<double> cdf;   // P(X <= k)
    std::vector<double> tail;  // P(X >= m), m = 0..kmax+1

    // Stretched family only: estimated amplitude A in
    // W(k) ~ A exp(-beta k^(1-lambda)/(1-lambda)), with a conservative error
    // bar from the convergence of the compensated sequence.  NaN for PowerLaw.
    double amplitude = std::numeric_limits<double>::quiet_NaN();
    double amplitude_err = std::numeric_limits<double>::quiet_NaN();

    // Exact log tail probability log P(X >= m), valid for any m >= 0
    // (PowerLaw: closed form from the gamma-ratio telescoping; Stretched:
    // table lookup, m <= kmax+1 only).
    double log_tail(std::int64_t m) const;

    // Leading asymptotic form of the tail P(X >= x):
    //   PowerLaw:  Gamma(b) x^(1-b)
    //   Stretched: (A x^lambda / beta) exp(-beta x^(1-lambda)/(1-lambda))
    double tail_asymptotic(double x) const;

    void save(const std::string& path) const;
    static WeightTable load(const std::string& path);
};

// kmax at which the neglected tail mass falls below mass_tol, capped to keep
// heavy-tailed tables bounded (the exact tail formula covers the rest).
std::int64_t default_kmax(const ModelParams& params, double mass_tol = 1e-14,
                          std::int64_t cap = (std::int64_t{1} << 21));

// Builds the normalized weight table with kmax entries.  Throws
// NumericalError if a Stretched truncation cannot certify 1e-12 mass accuracy.
WeightTable build_weight_table(const ModelParams& params, std::int64_t kmax);

// Grand-canonical partition function Z(phi) = sum_k phi^k / g(k)!,
// 0 <= phi <= phi_c, with truncation error below 1e-12.
double partition_function(const ModelParams& params, double phi);

// Density rho(phi) = E^{nu_phi}[eta_x]; strictly increasing in phi, equal to
// rho_c at phi = phi_c.
double density_of_fugacity(const ModelParams& params, double phi);

// Gauss hypergeometric identity value Gamma(u)Gamma(v)Gamma(w-u-v) /
// (Gamma(w-u)Gamma(w-v)), requiring w > u + v, plus the companion series
// sum_k Gamma(u+k)Gamma(v+k)/(Gamma(w+k) k!) for cross-validation.
double hypergeometric_sum(double u, double v, double w);
double hypergeometric_series(double u, double v, double w, double tol = 1e-12,
                             int max_terms = 20000000);

// Sandwich bounds on W(k2) given W(k1), k1 <= k2:
//   PowerLaw:  W(k1) (k1/k2)^b <= W(k2) <= W(k1)
//   Stretched: W(k1) exp(-beta (k2^(1-l) - k1^(1-l))/(1-l)) <= W(k2) <= W(k1)
std::pair<double, double> smoothness_bounds(const WeightTable& table, std::int64_t k1,
                                            std::int64_t k2);

// PowerLaw tail asymptote without a table (Gamma(b) x^(1-b)).
double tail_asymptotic(const ModelParams& params, double x);

// log W(k) from the closed gamma-ratio form, valid at any k (PowerLaw only).
double log_weight_closed_form(const ModelParams& params, std::int64_t k);

// Exact partial moments of the critical PowerLaw measure, obtained from the
// telescoping identities of the tail recursion (independent of the
// hypergeometric closed forms):
//   tail_sum_0(M) = sum_{m >= M} P(X >= m)          (finite iff b > 2)
//   tail_sum_1(M) = sum_{m >= M} m P(X >= m)        (finite iff b > 3)
double tail_sum_0(const ModelParams& params, std::int64_t M);
double tail_sum_1(const ModelParams& params, std::int64_t M);

}  // namespace zrp
