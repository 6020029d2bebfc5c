#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zrp/exact.hpp"
#include "zrp/model.hpp"
#include "zrp/rng.hpp"
#include "zrp/types.hpp"

namespace zrp {

// One draw from the critical single-site measure: inverse cdf over the table
// body, switching to the exact tail formula beyond kmax (power-law family) so
// the heavy tail is sampled without truncation bias.
std::int64_t sample_critical_marginal(const WeightTable& wt, RngStream& rng);

// Exact draw from the conditioned ensemble by sequential conditioning:
// site x_1 gets k with probability W(k) Q_{L-1,N-k} / Q_{L,N}, then the
// remaining mass recurses.  Requires a full table (all rows retained).
Configuration sample_canonical_exact(const CanonicalDistribution& dist, RngStream& rng);

// Fast supercritical approximation: L-1 independent critical draws, with the
// leftover mass placed on a uniformly chosen site; negative leftovers retry
// the whole draw.
struct CondensateStats {
    std::int64_t draws = 0;
    std::int64_t attempts = 0;
    std::int64_t last_assigned_site = -1;  // site that received the leftover mass
    bool regime_warning = false;           // N <= rho_c L + a_L
    double rejection_rate() const {
        return attempts == 0 ? 0.0
                             : static_cast<double>(attempts - draws) / static_cast<double>(attempts);
    }
};

Configuration sample_canonical_condensate(const WeightTable& wt, std::int64_t L, std::int64_t N,
                                          RngStream& rng, CondensateStats* stats = nullptr);

// Independent oracle: draw L iid critical values, accept iff they sum to N.
// Exact by construction; only viable when the acceptance probability Q_{L,N}
// is not too small.  Throws RegimeError after cap rejected attempts.
struct RejectionDraw {
    Configuration config;
    std::int64_t attempts = 0;
};

RejectionDraw sample_canonical_rejection(const WeightTable& wt, std::int64_t L, std::int64_t N,
                                         RngStream& rng, std::int64_t cap);

// A batch of configurations with full reproducibility metadata.
struct SampleBatch {
    ModelParams params;
    std::int64_t L = 0, N = 0;
    std::uint64_t seed = 0, stream_id = 0;
    std::string sampler_id;
    std::vector<Configuration> configs;

    std::string content_hash() const;  // sha1 over metadata + payload
    void write_csv(const std::string& path) const;
    void write_binary(const std::string& path) const;
    static SampleBatch read_binary(const std::string& path);
};

}  // namespace zrp
