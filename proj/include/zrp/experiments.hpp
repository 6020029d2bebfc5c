#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zrp/exact.hpp"
#include "zrp/limits.hpp"
#include "zrp/model.hpp"
#include "zrp/rng.hpp"
#include "zrp/stable.hpp"

namespace zrp {

// Per-sample summary statistics of one exact-sampler batch; the bulk path is
// reduced to its t = 1/2 and t = 1 marginals (path-space limits are out of
// scope).
struct BatchStatistics {
    std::int64_t L = 0, N = 0;
    std::uint64_t seed = 0;
    double zeta = 0.0;
    std::vector<double> centered_max;    // (M - (N - rho_c L)) / a_L
    std::vector<double> second_largest;  // M2 / (Gamma(b) L)^{1/(b-1)}
    std::vector<double> y_one;           // Y(1)
    std::vector<double> y_half;          // Y(1/2)
    std::vector<double> max_raw;         // M as drawn (condensate comparisons)
    double build_seconds = 0.0;
    double sample_seconds = 0.0;
};

// Draws n exact samples and reduces each to the statistics above.
// zeta_fraction positions the bulk cutoff inside (0, rho - rho_c).
BatchStatistics collect_exact_batch(const CanonicalDistribution& dist, std::int64_t n,
                                    std::uint64_t seed, double zeta_fraction = 0.5);

struct KsCheck {
    double ks = 0.0;
    double threshold = 0.0;
    std::int64_t n = 0;
    bool pass = false;
    std::string reference;
};

KsCheck ks_check(std::vector<double> samples, const std::function<double(double)>& ref,
                 double threshold, const std::string& reference);

// Local-limit-theorem ratio along an L grid at fixed density rho.
struct LltTrend {
    std::vector<std::int64_t> Ls;
    std::vector<std::int64_t> Ns;
    std::vector<double> ratios;
    bool strictly_decreasing = false;  // in |ratio - 1|
    double final_gap = 0.0;
    bool final_within_band = false;
};

LltTrend llt_trend(const ModelParams& params, const std::vector<std::int64_t>& Ls, double rho,
                   double band);

// Same trend with explicit particle numbers (moderate-deviation regimes).
LltTrend llt_trend_at(const ModelParams& params, const std::vector<std::int64_t>& Ls,
                      const std::vector<std::int64_t>& Ns, double band);

// Bulk-equivalence projection decay along an L grid at fixed density.
struct EquivalenceTrend {
    std::vector<EquivalenceReport> reports;
    bool tv_decreasing = false;
    double final_tv = 0.0;
};

EquivalenceTrend equivalence_trend(const ModelParams& params, const std::vector<std::int64_t>& Ls,
                             double rho, std::int64_t n_samples, std::uint64_t seed);

// Condensate-sampler fidelity against the exact sampler (paired batches).
struct CondensateFidelity {
    std::int64_t L = 0, N = 0, n = 0;
    double max_ks = 0.0;       // two-sample KS between maxima
    double bulk_tv = 0.0;      // single-site TV, assigned site excluded
    double rejection_rate = 0.0;
    bool regime_warning = false;
};

CondensateFidelity condensate_fidelity(const CanonicalDistribution& dist, std::int64_t n,
                                       std::uint64_t seed);

// llt_ratio scan across particle numbers around the moderate-deviation
// threshold.
struct ThresholdScan {
    std::int64_t L = 0;
    double gamma = 0.0;
    std::int64_t threshold = 0;
    std::vector<std::int64_t> Ns;
    std::vector<double> ratios;
    std::vector<double> gauss_term;
    std::vector<double> heavy_term;
};

ThresholdScan threshold_scan(const ModelParams& params, std::int64_t L, double gamma,
                             const std::vector<double>& fractions);

// Pearson correlation (increment-independence diagnostic).
double sample_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace zrp
