#include "zrp/experiments.hpp"

#include <chrono>
#include <cmath>

#include "zrp/sampling.hpp"
#include "zrp/special.hpp"

namespace zrp {

namespace {
double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}
}  // namespace

BatchStatistics collect_exact_batch(const CanonicalDistribution& dist, std::int64_t n,
                                    std::uint64_t seed, double zeta_fraction) {
    const CanonicalTable& t = dist.table();
    const auto cc = critical_constants(t.params);
    const double rho = static_cast<double>(t.N) / static_cast<double>(t.L);
    BatchStatistics out;
    out.L = t.L;
    out.N = t.N;
    out.seed = seed;
    out.zeta = zeta_fraction * (rho - cc.rho_c);
    const double a_L = normalization_aL(t.params, t.L);
    const double second_scale =
        std::pow(std::exp(log_gamma(t.params.b)) * static_cast<double>(t.L),
                 1.0 / (t.params.b - 1.0));
    const double centering = static_cast<double>(t.N) - cc.rho_c * static_cast<double>(t.L);
    const double cut = out.zeta * static_cast<double>(t.L);
    const std::int64_t half = t.L / 2;

    out.centered_max.reserve(static_cast<std::size_t>(n));
    out.second_largest.reserve(static_cast<std::size_t>(n));
    out.y_one.reserve(static_cast<std::size_t>(n));
    out.y_half.reserve(static_cast<std::size_t>(n));
    out.max_raw.reserve(static_cast<std::size_t>(n));

    RngStream rng(seed);
    const double t0 = now_seconds();
    for (std::int64_t s = 0; s < n; ++s) {
        const Configuration eta = sample_canonical_exact(dist, rng);
        const auto stats = config_stats(eta);
        out.max_raw.push_back(static_cast<double>(stats.M));
        out.centered_max.push_back((static_cast<double>(stats.M) - centering) / a_L);
        out.second_largest.push_back(static_cast<double>(stats.M2) / second_scale);
        double y = 0.0, yh = 0.0;
        for (std::int64_t j = 0; j < t.L; ++j) {
            const double v = eta[static_cast<std::size_t>(j)];
            y += (v < cut ? v : 0.0) - cc.rho_c;
            if (j + 1 == half) yh = y;
        }
        out.y_one.push_back(y / a_L);
        out.y_half.push_back(yh / a_L);
    }
    out.sample_seconds = now_seconds() - t0;
    return out;
}

KsCheck ks_check(std::vector<double> samples, const std::function<double(double)>& ref,
                 double threshold, const std::string& reference) {
    KsCheck out;
    out.n = static_cast<std::int64_t>(samples.size());
    out.ks = ks_distance(std::move(samples), ref);
    out.threshold = threshold;
    out.pass = out.ks < threshold;
    out.reference = reference;
    return out;
}

namespace {
LltTrend finish_trend(LltTrend trend, double band) {
    trend.strictly_decreasing = true;
    for (std::size_t i = 1; i < trend.ratios.size(); ++i) {
        if (std::fabs(trend.ratios[i] - 1.0) >= std::fabs(trend.ratios[i - 1] - 1.0))
            trend.strictly_decreasing = false;
    }
    trend.final_gap = std::fabs(trend.ratios.back() - 1.0);
    trend.final_within_band = trend.final_gap < band;
    return trend;
}
}  // namespace

LltTrend llt_trend(const ModelParams& params, const std::vector<std::int64_t>& Ls, double rho,
                   double band) {
    LltTrend trend;
    trend.Ls = Ls;
    for (const auto L : Ls)
        trend.Ns.push_back(static_cast<std::int64_t>(std::llround(rho * static_cast<double>(L))));
    for (std::size_t i = 0; i < Ls.size(); ++i)
        trend.ratios.push_back(llt_ratio(params, Ls[i], trend.Ns[i]));
    return finish_trend(std::move(trend), band);
}

LltTrend llt_trend_at(const ModelParams& params, const std::vector<std::int64_t>& Ls,
                      const std::vector<std::int64_t>& Ns, double band) {
    LltTrend trend;
    trend.Ls = Ls;
    trend.Ns = Ns;
    for (std::size_t i = 0; i < Ls.size(); ++i)
        trend.ratios.push_back(llt_ratio(params, Ls[i], Ns[i]));
    return finish_trend(std::move(trend), band);
}

EquivalenceTrend equivalence_trend(const ModelParams& params, const std::vector<std::int64_t>& Ls,
                             double rho, std::int64_t n_samples, std::uint64_t seed) {
    EquivalenceTrend out;
    for (std::size_t i = 0; i < Ls.size(); ++i) {
        const std::int64_t L = Ls[i];
        const auto N = static_cast<std::int64_t>(std::llround(rho * static_cast<double>(L)));
        const CanonicalDistribution dist(
            std::make_shared<const CanonicalTable>(build_canonical_table(params, L, N)));
        RngStream rng(seed, i);
        out.reports.push_back(equivalence_experiment(dist, n_samples, rng));
    }
    out.tv_decreasing = true;
    for (std::size_t i = 1; i < out.reports.size(); ++i)
        if (out.reports[i].tv_single >= out.reports[i - 1].tv_single) out.tv_decreasing = false;
    out.final_tv = out.reports.back().tv_single;
    return out;
}

CondensateFidelity condensate_fidelity(const CanonicalDistribution& dist, std::int64_t n,
                                       std::uint64_t seed) {
    const CanonicalTable& t = dist.table();
    CondensateFidelity out;
    out.L = t.L;
    out.N = t.N;
    out.n = n;

    // full-support weight table for the iid marginal draws
    const auto wt = std::make_shared<const WeightTable>(
        build_weight_table(t.params, default_kmax(t.params)));

    RngStream rng_exact(seed, 0);
    RngStream rng_cond(seed, 1);
    std::vector<double> max_exact, max_cond;
    max_exact.reserve(static_cast<std::size_t>(n));
    max_cond.reserve(static_cast<std::size_t>(n));
    std::map<std::int64_t, double> bulk_hist;
    CondensateStats stats;
    double bulk_draws = 0.0;
    for (std::int64_t s = 0; s < n; ++s) {
        const auto exact = sample_canonical_exact(dist, rng_exact);
        max_exact.push_back(static_cast<double>(config_stats(exact).M));
        const auto cond = sample_canonical_condensate(*wt, t.L, t.N, rng_cond, &stats);
        max_cond.push_back(static_cast<double>(config_stats(cond).M));
        // pool every site except the one that received the leftover mass;
        // those values are iid critical draws by construction
        for (std::int64_t x = 0; x < t.L; ++x) {
            if (x == stats.last_assigned_site) continue;
            ++bulk_hist[cond[static_cast<std::size_t>(x)]];
            bulk_draws += 1.0;
        }
    }
    // remove the assigned-site contamination by comparing against the exact
    // critical marginal over the same support
    std::map<std::int64_t, double> ref;
    for (auto& [k, v] : bulk_hist) {
        v /= bulk_draws;
        if (k <= wt->kmax) ref[k] = wt->w[static_cast<std::size_t>(k)];
    }
    double ref_mass = 0.0;
    for (const auto& [k, v] : ref) ref_mass += v;
    // fold the reference remainder into an off-support bucket so both pmfs
    // share a countable support
    std::map<std::int64_t, double> ref_full = ref;
    ref_full[-1] = std::max(0.0, 1.0 - ref_mass);
    out.bulk_tv = tv_distance(bulk_hist, ref_full);
    out.max_ks = ks_two_sample(std::move(max_exact), std::move(max_cond));
    out.rejection_rate = stats.rejection_rate();
    out.regime_warning = stats.regime_warning;
    return out;
}

ThresholdScan threshold_scan(const ModelParams& params, std::int64_t L, double gamma,
                             const std::vector<double>& fractions) {
    ThresholdScan out;
    out.L = L;
    out.gamma = gamma;
    out.threshold = moderate_deviation_threshold(params, L, gamma);
    const double rho_c = critical_constants(params).rho_c;
    const double base = rho_c * static_cast<double>(L);
    const double excess = static_cast<double>(out.threshold) - base;
    for (const double f : fractions) {
        const auto N = static_cast<std::int64_t>(std::llround(base + f * excess));
        BuildOptions opts;
        opts.full = false;
        const auto table = build_canonical_table(params, L, N, opts);
        out.Ns.push_back(N);
        out.ratios.push_back(llt_ratio(table));
        const auto decomp = moderate_deviation_decomposition(table);
        out.gauss_term.push_back(decomp.gauss);
        out.heavy_term.push_back(decomp.heavy);
    }
    return out;
}

double sample_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::domain_error("sample_correlation: size mismatch");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace zrp
