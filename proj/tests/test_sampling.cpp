#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "zrp/exact.hpp"
#include "zrp/sampling.hpp"
#include "zrp/special.hpp"

using namespace zrp;

namespace {
const ModelParams kB4 = ModelParams::power_law(4.0);

CanonicalDistribution make_dist(const ModelParams& p, std::int64_t L, std::int64_t N) {
    return CanonicalDistribution(
        std::make_shared<const CanonicalTable>(build_canonical_table(p, L, N)));
}

double chi_square_p(const std::map<std::int64_t, std::int64_t>& observed,
                    const std::vector<double>& expected_prob, std::int64_t n) {
    double stat = 0.0;
    int dof = -1;
    for (std::size_t i = 0; i < expected_prob.size(); ++i) {
        const double expect = expected_prob[i] * static_cast<double>(n);
        if (expect < 1e-9) continue;
        const auto it = observed.find(static_cast<std::int64_t>(i));
        const double obs = it == observed.end() ? 0.0 : static_cast<double>(it->second);
        stat += (obs - expect) * (obs - expect) / expect;
        ++dof;
    }
    return chi_square_sf(stat, dof);
}
}  // namespace

TEST_CASE("rng streams are reproducible and platform-pinned") {
    RngStream a(42, 0), b(42, 0), c(42, 1);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    bool differs = false;
    for (int i = 0; i < 10; ++i) differs |= (a.next_u64() != c.next_u64());
    CHECK(differs);
    RngStream d(42, 0);
    const double u = d.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
}

TEST_CASE("critical marginal sampler matches the table") {
    const auto wt = build_weight_table(kB4, 64);
    RngStream rng(1234);
    const int n = 1'000'000;
    std::int64_t zeros = 0;
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto k = sample_critical_marginal(wt, rng);
        zeros += (k == 0);
        mean += static_cast<double>(k);
    }
    mean /= n;
    // binomial 4-sigma band around W(0) = 0.75
    CHECK(std::fabs(static_cast<double>(zeros) / n - 0.75) < 0.002);
    // mean rho_c = 0.5 (heavy tail slows this down less at b = 4)
    CHECK(std::fabs(mean - 0.5) < 0.01);
}

TEST_CASE("marginal sampler has no truncation bias past kmax") {
    // small table forces the exact-tail switch; empirical tail tracks
    // Gamma(b) x^(1-b)
    const auto p25 = ModelParams::power_law(2.5);
    const auto wt = build_weight_table(p25, 64);
    RngStream rng(777);
    const int n = 4'000'000;
    const double x = 320.0;
    std::int64_t over = 0;
    for (int i = 0; i < n; ++i)
        if (static_cast<double>(sample_critical_marginal(wt, rng)) >= x) ++over;
    const double emp_tail = static_cast<double>(over) / n;
    const double ratio = emp_tail * std::pow(x, p25.b - 1.0) / std::exp(log_gamma(p25.b));
    CHECK(ratio > 0.8);
    CHECK(ratio < 1.2);
}

TEST_CASE("exact sampler degenerate cases") {
    RngStream rng(5);
    const auto d17 = make_dist(kB4, 1, 7);
    CHECK(sample_canonical_exact(d17, rng) == Configuration{7});
    const auto d40 = make_dist(kB4, 4, 0);
    CHECK(sample_canonical_exact(d40, rng) == Configuration{0, 0, 0, 0});
}

TEST_CASE("exact sampler conserves mass and matches the fiber law") {
    const auto dist = make_dist(kB4, 3, 5);
    const auto fiber = enumerate_fiber(3, 5);
    std::vector<double> probs;
    probs.reserve(fiber.size());
    for (const auto& eta : fiber) probs.push_back(dist.prob(eta));
    // configuration -> fiber index (lexicographic order)
    auto index_of = [&](const Configuration& eta) {
        for (std::size_t i = 0; i < fiber.size(); ++i)
            if (fiber[i] == eta) return static_cast<std::int64_t>(i);
        return std::int64_t{-1};
    };
    for (const std::uint64_t seed : {11u, 22u, 33u}) {
        RngStream rng(seed);
        std::map<std::int64_t, std::int64_t> hist;
        const int n = 30000;
        for (int i = 0; i < n; ++i) {
            const auto eta = sample_canonical_exact(dist, rng);
            REQUIRE(total_particles(eta) == 5);
            ++hist[index_of(eta)];
        }
        CHECK(chi_square_p(hist, probs, n) > 0.001);
    }
}

TEST_CASE("conditional pmfs of the sequential sampler normalize") {
    const auto dist = make_dist(kB4, 6, 20);
    const auto& t = dist.table();
    for (std::int64_t r = 2; r <= 6; ++r) {
        for (const std::int64_t n : {std::int64_t{0}, std::int64_t{7}, std::int64_t{20}}) {
            double total = 0.0;
            for (std::int64_t k = 0; k <= n; ++k)
                total += std::exp(t.weights->logw[static_cast<std::size_t>(k)] +
                                  t.logq_at(r - 1, n - k) - t.logq_at(r, n));
            CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("condensate sampler") {
    const auto wt = build_weight_table(kB4, default_kmax(kB4));
    RngStream rng(99);
    CondensateStats stats;
    const std::int64_t L = 100, N = 200;  // rho = 2, deep in the condensed phase
    for (int i = 0; i < 2000; ++i) {
        const auto eta = sample_canonical_condensate(wt, L, N, rng, &stats);
        REQUIRE(total_particles(eta) == N);
    }
    CHECK(stats.draws == 2000);
    CHECK(stats.rejection_rate() < 0.05);
    CHECK_FALSE(stats.regime_warning);
    // subcritical request is refused
    CHECK_THROWS_AS(sample_canonical_condensate(wt, 100, 40, rng), RegimeError);
    // shallow supercritical region only warns
    CondensateStats warn_stats;
    (void)sample_canonical_condensate(wt, 100, 52, rng, &warn_stats);
    CHECK(warn_stats.regime_warning);
}

TEST_CASE("rejection sampler is exact and reports acceptance") {
    const auto wt = build_weight_table(kB4, 64);
    RngStream rng(2024);
    // acceptance probability equals Q_{2,2} = 0.0975
    std::int64_t attempts = 0, draws = 0;
    while (attempts < 1'000'000) {
        const auto out = sample_canonical_rejection(wt, 2, 2, rng, 1 << 20);
        REQUIRE(total_particles(out.config) == 2);
        attempts += out.attempts;
        ++draws;
    }
    const double rate = static_cast<double>(draws) / static_cast<double>(attempts);
    CHECK(std::fabs(rate - 0.0975) < 0.001);

    // L = 1 accepts iff the draw equals N; acceptance rate is W(N)
    RngStream rng1(5);
    std::int64_t att1 = 0, n1 = 0;
    for (int i = 0; i < 3000; ++i) {
        const auto out = sample_canonical_rejection(wt, 1, 2, rng1, 1 << 22);
        att1 += out.attempts;
        ++n1;
    }
    const double rate1 = static_cast<double>(n1) / static_cast<double>(att1);
    CHECK(std::fabs(rate1 - wt.w[2]) < 4.0 * std::sqrt(0.05 * 0.95 / static_cast<double>(att1)));

    RngStream rng2(6);
    CHECK_THROWS_AS(sample_canonical_rejection(wt, 3, 50, rng2, 10), RegimeError);
}

TEST_CASE("rejection and sequential samplers agree (two-sample chi-square)") {
    const auto dist = make_dist(kB4, 3, 5);
    const auto wt = build_weight_table(kB4, 64);
    const auto fiber = enumerate_fiber(3, 5);
    auto index_of = [&](const Configuration& eta) {
        for (std::size_t i = 0; i < fiber.size(); ++i)
            if (fiber[i] == eta) return i;
        return fiber.size();
    };
    const int n = 30000;
    std::vector<double> h_seq(fiber.size(), 0.0), h_rej(fiber.size(), 0.0);
    RngStream ra(31), rb(32);
    for (int i = 0; i < n; ++i) {
        ++h_seq[index_of(sample_canonical_exact(dist, ra))];
        ++h_rej[index_of(sample_canonical_rejection(wt, 3, 5, rb, 1 << 22).config)];
    }
    double stat = 0.0;
    int dof = -1;
    for (std::size_t i = 0; i < fiber.size(); ++i) {
        const double tot = h_seq[i] + h_rej[i];
        if (tot == 0.0) continue;
        stat += (h_seq[i] - h_rej[i]) * (h_seq[i] - h_rej[i]) / (2.0 * tot);
        ++dof;
    }
    CHECK(chi_square_sf(stat, dof) > 0.001);
}

TEST_CASE("batches reproduce byte-for-byte from their seed") {
    const auto dist = make_dist(kB4, 3, 5);
    auto make_batch = [&](std::uint64_t seed) {
        SampleBatch b;
        b.params = kB4;
        b.L = 3;
        b.N = 5;
        b.seed = seed;
        b.stream_id = 0;
        b.sampler_id = "exact";
        RngStream rng(seed, 0);
        for (int i = 0; i < 50; ++i) b.configs.push_back(sample_canonical_exact(dist, rng));
        return b;
    };
    const auto b1 = make_batch(4242), b2 = make_batch(4242);
    CHECK(b1.content_hash() == b2.content_hash());
    b1.write_csv("batch_a.csv");
    b2.write_csv("batch_b.csv");
    std::ifstream fa("batch_a.csv"), fb("batch_b.csv");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().find("sampler=exact") != std::string::npos);

    b1.write_binary("batch_a.bin");
    const auto back = SampleBatch::read_binary("batch_a.bin");
    CHECK(back.configs == b1.configs);
    CHECK(back.content_hash() == b1.content_hash());
    CHECK(back.sampler_id == "exact");
    std::remove("batch_a.csv");
    std::remove("batch_b.csv");
    std::remove("batch_a.bin");
}
