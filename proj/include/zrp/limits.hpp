#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "zrp/exact.hpp"
#include "zrp/model.hpp"
#include "zrp/rng.hpp"
#include "zrp/types.hpp"

namespace zrp {

// Order statistics of a configuration.  Ties in the maximum resolve to the
// smallest site index.
struct ConfigStats {
    std::int64_t S = 0;       // total particles
    std::int32_t M = 0;       // largest component
    std::int64_t argmax = 0;  // its (smallest) site index
    std::int32_t M2 = 0;      // second largest component (0 when L = 1)
};

ConfigStats config_stats(const Configuration& eta);

// Exchanges the last and the maximum component, so the bulk occupies the
// first L-1 coordinates.
Configuration swap_max(const Configuration& eta);

// Bulk fluctuation normalization (natural logarithms):
//   sigma sqrt(L)             b > 3
//   2 sqrt(L log L)           b = 3
//   (Gamma(b) L)^(1/(b-1))    2 < b < 3
double normalization_aL(const ModelParams& params, std::int64_t L);

// (M_L - (N - rho_c L)) / a_L
double centered_max(const ConfigStats& stats, const ModelParams& params, std::int64_t L,
                    std::int64_t N);

// M_L^(2) / (Gamma(b) L)^(1/(b-1)); limiting law has cdf exp(-x^(1-b)).
double second_largest_normalized(const ConfigStats& stats, const ModelParams& params,
                                 std::int64_t L);
double frechet_cdf(double b, double x);

// Piecewise-constant rescaled bulk fluctuation path:
//   Y(j/L) = (1/a_L) sum_{i<=j} (eta*_i - rho_c), eta* = eta 1{eta < zeta L}.
struct BulkPath {
    std::vector<double> times;   // 0, 1/L, ..., 1
    std::vector<double> values;  // Y at those times; values[0] = 0
    double zeta = 0.0;
    double a_L = 0.0;
    double value_at(double t) const;  // Y(t) for t in [0, 1]
};

BulkPath bulk_path(const Configuration& eta, const ModelParams& params, double zeta);

// sup-norm distance between the empirical cdf of the samples and ref_cdf
double ks_distance(std::vector<double> samples, const std::function<double(double)>& ref_cdf);

// sup-norm distance between two empirical cdfs
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Total variation distance, sup_A |p(A) - q(A)| = half the L1 distance.
double tv_distance(std::span<const double> p, std::span<const double> q);
double tv_distance(const std::map<std::int64_t, double>& p,
                   const std::map<std::int64_t, double>& q);

// Equivalence-of-ensembles experiment: draws exact canonical samples, applies
// swap_max, and measures how far the bulk is from the critical product law.
// The (L-1)-dimensional total variation cannot be estimated from samples, so
// the report carries 1-site and 2-site projections plus moment summaries; the
// projections lower-bound the full distance.
struct EquivalenceReport {
    std::int64_t L = 0, N = 0, n_samples = 0;
    bool subcritical_warning = false;
    double tv_single = 0.0;       // empirical first-site pmf vs critical marginal
    double tv_single_err = 0.0;   // Monte Carlo error estimate
    double tv_single_bias = 0.0;  // expected positive bias of the plug-in estimate
    double tv_pair = 0.0;         // 2-site joint pmf vs product law
    double tv_pair_err = 0.0;
    double tv_pair_bias = 0.0;
    double bulk_mean = 0.0;       // pooled bulk occupancy mean
    double bulk_mean_se = 0.0;
    double bulk_var = 0.0;
    double rho_c = 0.0;           // reference values
    double sigma2 = 0.0;
};

EquivalenceReport equivalence_experiment(const CanonicalDistribution& dist, std::int64_t n_samples,
                                   RngStream& rng);

}  // namespace zrp
