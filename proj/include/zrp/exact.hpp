#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "zrp/model.hpp"
#include "zrp/types.hpp"

namespace zrp {

// Partial-sum table of the critical product measure:
//   logq(l, n) = log P(S_l = n) for l sites carrying n particles in total,
// computed by convolution dynamic programming in log space.  In full mode all
// rows 1..L are retained (required by the sequential sampler); in rolling mode
// only rows L-1 and L survive, which is enough for probabilities and site
// marginals.
struct CanonicalTable {
    ModelParams params;
    std::int64_t L = 1;
    std::int64_t N = 0;
    bool full = true;
    std::shared_ptr<const WeightTable> weights;  // kmax >= max(N, 1)
    std::vector<double> logq;                    // row-major, see row()

    double logq_at(std::int64_t l, std::int64_t n) const;
    std::span<const double> row(std::int64_t l) const;  // entries n = 0..N

    void save(const std::string& path) const;
    static CanonicalTable load(const std::string& path);
};

struct BuildOptions {
    bool full = true;
    std::int64_t memory_budget_bytes = std::int64_t{6} * (1 << 30);
    int threads = 0;  // 0 = automatic
};

CanonicalTable build_canonical_table(const ModelParams& params, std::int64_t L,
                                     std::int64_t N, BuildOptions opts = {});

// Conditioned-ensemble evaluators backed by a shared table.
class CanonicalDistribution {
public:
    explicit CanonicalDistribution(std::shared_ptr<const CanonicalTable> table);

    // P(eta) = prod_x W(eta_x) / Q_{L,N}; requires |eta| = L and S_L(eta) = N.
    double prob(const Configuration& eta) const;
    double log_prob(const Configuration& eta) const;

    // P(eta_{x_1} = k) = W(k) Q_{L-1,N-k} / Q_{L,N}; identical for every site.
    double site_marginal(std::int64_t k) const;

    const CanonicalTable& table() const { return *table_; }
    std::shared_ptr<const CanonicalTable> table_ptr() const { return table_; }

private:
    std::shared_ptr<const CanonicalTable> table_;
};

// All occupation vectors of length L summing to N, in lexicographic order.
// Throws ResourceError when the composition count C(N+L-1, L-1) exceeds cap.
std::vector<Configuration> enumerate_fiber(std::int64_t L, std::int64_t N,
                                           std::int64_t cap = 10'000'000);

// Number of compositions C(N+L-1, L-1), or -1 if it overflows the cap scale.
std::int64_t fiber_size(std::int64_t L, std::int64_t N, std::int64_t cap);

// Local-limit ratio Q_{L,N} / (L W(N - floor(rho_c L))); approaches 1 in the
// supercritical thermodynamic limit.
double llt_ratio(const ModelParams& params, std::int64_t L, std::int64_t N);
double llt_ratio(const CanonicalTable& table);

// Smallest particle number at which the moderate-deviation refinement of the
// condensation threshold holds for the supplied gamma(L):
//   PowerLaw (b > 3): rho_c L + (b-1)/(b-2) sqrt(L log L) (1
//                      + b/(2(b-3)) loglog L / log L + gamma / log L)
//   Stretched:        rho_c L + gamma L^{1/(2 lambda)}
// rounded up.  Natural logarithms throughout.
std::int64_t moderate_deviation_threshold(const ModelParams& params, std::int64_t L,
                                          double gammaL);

// Gaussian + heavy-tail decomposition of Q_{L,N} in the moderate-deviation
// regime (report-only cross-check; no tolerance attached):
//   gauss = phi((N - rho_c L)/(sigma sqrt(L))) / (sigma sqrt(L)),
//   heavy = L W(N - floor(rho_c L)).
struct ModerateDeviationDecomposition {
    double q;      // Q_{L,N}
    double gauss;  // Gaussian local term
    double heavy;  // condensate local term
};
ModerateDeviationDecomposition moderate_deviation_decomposition(const CanonicalTable& table);

}  // namespace zrp
