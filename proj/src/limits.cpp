#include "zrp/limits.hpp"

#include <algorithm>
#include <cmath>

#include "zrp/sampling.hpp"
#include "zrp/special.hpp"

namespace zrp {

ConfigStats config_stats(const Configuration& eta) {
    if (eta.empty()) throw std::domain_error("config_stats: empty configuration");
    ConfigStats s;
    s.M = eta[0];
    s.argmax = 0;
    std::int32_t second = 0;
    for (std::size_t x = 0; x < eta.size(); ++x) {
        const std::int32_t v = eta[x];
        s.S += v;
        if (v > s.M) {
            second = s.M;
            s.M = v;
            s.argmax = static_cast<std::int64_t>(x);
        } else if (x > 0 && v > second) {
            second = v;
        }
    }
    s.M2 = eta.size() > 1 ? second : 0;
    return s;
}

Configuration swap_max(const Configuration& eta) {
    Configuration out = eta;
    if (out.empty()) throw std::domain_error("swap_max: empty configuration");
    const auto stats = config_stats(out);
    std::swap(out[static_cast<std::size_t>(stats.argmax)], out[out.size() - 1]);
    return out;
}

double normalization_aL(const ModelParams& params, std::int64_t L) {
    if (params.family != RateFamily::PowerLaw)
        throw std::domain_error("normalization_aL: power-law family only");
    const double b = params.b;
    if (!(b > 2.0)) throw std::domain_error("normalization_aL: b > 2 required");
    const double Ld = static_cast<double>(L);
    if (b > 3.0) {
        const double sigma = std::sqrt(critical_constants(params).sigma2);
        return sigma * std::sqrt(Ld);
    }
    if (b == 3.0) return 2.0 * std::sqrt(Ld * std::log(Ld));
    return std::pow(std::exp(log_gamma(b)) * Ld, 1.0 / (b - 1.0));
}

double centered_max(const ConfigStats& stats, const ModelParams& params, std::int64_t L,
                    std::int64_t N) {
    const double rho_c = critical_constants(params).rho_c;
    const double centering = static_cast<double>(N) - rho_c * static_cast<double>(L);
    return (static_cast<double>(stats.M) - centering) / normalization_aL(params, L);
}

double second_largest_normalized(const ConfigStats& stats, const ModelParams& params,
                                 std::int64_t L) {
    if (L < 2) throw std::domain_error("second_largest_normalized: L >= 2 required");
    const double b = params.b;
    const double scale = std::pow(std::exp(log_gamma(b)) * static_cast<double>(L), 1.0 / (b - 1.0));
    return static_cast<double>(stats.M2) / scale;
}

double frechet_cdf(double b, double x) {
    if (x <= 0.0) return 0.0;
    return std::exp(-std::pow(x, 1.0 - b));
}

double BulkPath::value_at(double t) const {
    if (t < 0.0 || t > 1.0) throw std::domain_error("BulkPath::value_at: t in [0,1]");
    const auto L = static_cast<double>(values.size() - 1);
    auto j = static_cast<std::size_t>(std::floor(L * t));
    if (j >= values.size()) j = values.size() - 1;
    return values[j];
}

BulkPath bulk_path(const Configuration& eta, const ModelParams& params, double zeta) {
    const auto L = static_cast<std::int64_t>(eta.size());
    if (L < 1) throw std::domain_error("bulk_path: empty configuration");
    const double rho = static_cast<double>(total_particles(eta)) / static_cast<double>(L);
    const double rho_c = critical_constants(params).rho_c;
    // supercritical runs must place the cutoff below the condensate scale; at
    // or below the critical density there is nothing to cut and any positive
    // zeta is admissible
    if (!(zeta > 0.0) || (rho > rho_c && zeta >= rho - rho_c))
        throw std::domain_error("bulk_path: zeta outside (0, rho - rho_c)");
    BulkPath path;
    path.zeta = zeta;
    path.a_L = normalization_aL(params, L);
    path.times.resize(static_cast<std::size_t>(L) + 1);
    path.values.resize(static_cast<std::size_t>(L) + 1);
    path.times[0] = 0.0;
    path.values[0] = 0.0;
    const double cut = zeta * static_cast<double>(L);
    for (std::int64_t j = 1; j <= L; ++j) {
        const double v = static_cast<double>(eta[static_cast<std::size_t>(j - 1)]);
        const double bulk_v = v < cut ? v : 0.0;
        path.times[static_cast<std::size_t>(j)] = static_cast<double>(j) / static_cast<double>(L);
        path.values[static_cast<std::size_t>(j)] =
            path.values[static_cast<std::size_t>(j - 1)] + (bulk_v - rho_c) / path.a_L;
    }
    return path;
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& ref_cdf) {
    if (samples.empty()) throw std::domain_error("ks_distance: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = ref_cdf(samples[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::domain_error("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::domain_error("tv_distance: support size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
    return 0.5 * s;
}

double tv_distance(const std::map<std::int64_t, double>& p,
                   const std::map<std::int64_t, double>& q) {
    double s = 0.0;
    auto it_p = p.begin();
    auto it_q = q.begin();
    while (it_p != p.end() || it_q != q.end()) {
        if (it_q == q.end() || (it_p != p.end() && it_p->first < it_q->first)) {
            s += std::fabs(it_p->second);
            ++it_p;
        } else if (it_p == p.end() || it_q->first < it_p->first) {
            s += std::fabs(it_q->second);
            ++it_q;
        } else {
            s += std::fabs(it_p->second - it_q->second);
            ++it_p;
            ++it_q;
        }
    }
    return 0.5 * s;
}

EquivalenceReport equivalence_experiment(const CanonicalDistribution& dist, std::int64_t n_samples,
                                   RngStream& rng) {
    const CanonicalTable& t = dist.table();
    if (t.L < 2) throw std::domain_error("equivalence_experiment: L >= 2 required");
    if (n_samples < 1) throw std::domain_error("equivalence_experiment: n_samples >= 1");
    const auto cc = critical_constants(t.params);

    EquivalenceReport rep;
    rep.L = t.L;
    rep.N = t.N;
    rep.n_samples = n_samples;
    rep.rho_c = cc.rho_c;
    rep.sigma2 = cc.sigma2;
    rep.subcritical_warning =
        !(static_cast<double>(t.N) / static_cast<double>(t.L) > cc.rho_c);

    std::vector<std::int64_t> h1;          // first-site histogram after swap
    std::map<std::int64_t, std::int64_t> h2;  // packed (v1, v2) pair histogram
    double bulk_sum = 0.0, bulk_sq = 0.0;
    const double bulk_count = static_cast<double>(n_samples) * static_cast<double>(t.L - 1);

    for (std::int64_t s = 0; s < n_samples; ++s) {
        Configuration eta = sample_canonical_exact(dist, rng);
        eta = swap_max(eta);
        const std::int64_t v1 = eta[0];
        const std::int64_t v2 = eta[1];
        if (v1 >= static_cast<std::int64_t>(h1.size()))
            h1.resize(static_cast<std::size_t>(v1) + 1, 0);
        ++h1[static_cast<std::size_t>(v1)];
        ++h2[v1 * (t.N + 1) + v2];
        for (std::size_t x = 0; x + 1 < eta.size(); ++x) {
            const double v = eta[x];
            bulk_sum += v;
            bulk_sq += v * v;
        }
    }

    const auto& wt = *t.weights;
    const double n = static_cast<double>(n_samples);

    // single-site TV: observed support plus the exact remainder of the
    // reference mass beyond it
    double tv = 0.0, var_acc = 0.0, bias_acc = 0.0;
    for (std::size_t k = 0; k < h1.size(); ++k) {
        const double emp = static_cast<double>(h1[k]) / n;
        const double ref = wt.w[k];
        tv += std::fabs(emp - ref);
        var_acc += ref * (1.0 - ref);
        bias_acc += std::sqrt(ref * (1.0 - ref));
    }
    tv += wt.tail[h1.size()];
    rep.tv_single = 0.5 * tv;
    rep.tv_single_err = 0.5 * std::sqrt(var_acc / n);
    rep.tv_single_bias = 0.5 * bias_acc * std::sqrt(2.0 / (M_PI * n));

    double tv2 = 0.0, var2 = 0.0, bias2 = 0.0, covered = 0.0;
    for (const auto& [key, count] : h2) {
        const std::int64_t v1 = key / (t.N + 1), v2 = key % (t.N + 1);
        const double emp = static_cast<double>(count) / n;
        const double ref = wt.w[static_cast<std::size_t>(v1)] * wt.w[static_cast<std::size_t>(v2)];
        tv2 += std::fabs(emp - ref);
        covered += ref;
        var2 += ref * (1.0 - ref);
        bias2 += std::sqrt(ref * (1.0 - ref));
    }
    tv2 += std::max(0.0, 1.0 - covered);
    rep.tv_pair = 0.5 * tv2;
    rep.tv_pair_err = 0.5 * std::sqrt(var2 / n);
    rep.tv_pair_bias = 0.5 * bias2 * std::sqrt(2.0 / (M_PI * n));

    rep.bulk_mean = bulk_sum / bulk_count;
    rep.bulk_var = bulk_sq / bulk_count - rep.bulk_mean * rep.bulk_mean;
    const double var_for_se = std::isfinite(cc.sigma2) ? cc.sigma2 : rep.bulk_var;
    rep.bulk_mean_se = std::sqrt(var_for_se / bulk_count);
    return rep;
}

}  // namespace zrp
