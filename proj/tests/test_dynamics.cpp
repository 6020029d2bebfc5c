#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "zrp/dynamics.hpp"
#include "zrp/exact.hpp"
#include "zrp/limits.hpp"

using namespace zrp;

namespace {
const ModelParams kB4 = ModelParams::power_law(4.0);
}

TEST_CASE("built-in kernels are doubly stochastic") {
    for (const std::int64_t L : {std::int64_t{2}, std::int64_t{3}, std::int64_t{7}}) {
        for (const auto& kernel :
             {TransitionKernel::uniform_off_diagonal(L), TransitionKernel::ring(L)}) {
            for (std::int64_t x = 0; x < L; ++x) {
                double row = 0.0, col = 0.0;
                for (std::int64_t y = 0; y < L; ++y) {
                    row += kernel.prob(x, y);
                    col += kernel.prob(y, x);
                }
                CHECK(row == doctest::Approx(1.0).epsilon(1e-14));
                CHECK(col == doctest::Approx(1.0).epsilon(1e-14));
            }
        }
    }
    CHECK(TransitionKernel::uniform_off_diagonal(4).prob(1, 1) == 0.0);
    CHECK(TransitionKernel::ring(5).prob(0, 1) == 0.5);
    CHECK(TransitionKernel::ring(5).prob(0, 4) == 0.5);
    CHECK(TransitionKernel::ring(5).prob(0, 2) == 0.0);
    CHECK(TransitionKernel::ring(2).prob(0, 1) == 1.0);
}

TEST_CASE("custom kernel validation") {
    // valid symmetric kernel with a self loop
    CHECK_NOTHROW(TransitionKernel::custom(2, {0.5, 0.5, 0.5, 0.5}));
    // row sums off
    CHECK_THROWS_AS(TransitionKernel::custom(2, {0.6, 0.5, 0.5, 0.5}), std::domain_error);
    // doubly stochastic but reducible (block diagonal)
    CHECK_THROWS_AS(TransitionKernel::custom(4, {1, 0, 0, 0,  //
                                                 0, 1, 0, 0,  //
                                                 0, 0, 0, 1,  //
                                                 0, 0, 1, 0}),
                    std::domain_error);
    CHECK_THROWS_AS(TransitionKernel::custom(2, {1.5, -0.5, -0.5, 1.5}), std::domain_error);
}

TEST_CASE("single gillespie step") {
    RngStream rng(17);
    // eta = (2, 0): only site 0 can fire, uniform kernel forces target 1
    const Configuration eta{2, 0};
    const auto kernel = TransitionKernel::uniform_off_diagonal(2);
    double mean_dt = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const auto step = gillespie_step(kB4, eta, kernel, rng);
        CHECK(step.from == 0);
        CHECK(step.to == 1);
        mean_dt += step.dt;
    }
    // total rate g(2) = 1 + 4/2 = 3
    CHECK(std::fabs(mean_dt / n - 1.0 / 3.0) < 0.01);
    CHECK_THROWS_AS(gillespie_step(kB4, Configuration{0, 0}, kernel, rng), std::domain_error);
}

TEST_CASE("departure rate for a single particle is g(1) = 1 + b") {
    RngStream rng(3);
    const auto kernel = TransitionKernel::uniform_off_diagonal(3);
    double mean_dt = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) mean_dt += gillespie_step(kB4, {0, 1, 0}, kernel, rng).dt;
    CHECK(std::fabs(mean_dt / n - 1.0 / 5.0) < 0.01);
}

TEST_CASE("total rate additivity on random configurations") {
    RngStream rng(23);
    for (int rep = 0; rep < 50; ++rep) {
        Configuration eta(8);
        for (auto& v : eta) v = static_cast<std::int32_t>(rng.next_below(6));
        if (total_particles(eta) == 0) eta[0] = 1;
        double direct = 0.0;
        for (const auto v : eta) direct += jump_rate(kB4, v);
        double per_site = 0.0;
        for (std::size_t x = 0; x < eta.size(); ++x) per_site += jump_rate(kB4, eta[x]);
        CHECK(direct == doctest::Approx(per_site).epsilon(1e-15));
    }
}

TEST_CASE("simulation conserves particles and events are legal") {
    RngStream rng(71);
    Configuration eta0{3, 1, 0, 1};
    const auto kernel = TransitionKernel::ring(4);
    const auto traj = simulate(kB4, eta0, kernel, 50.0, rng);
    CHECK(total_particles(traj.final_config) == 5);
    // replay: every event moves one particle off a nonempty site; times increase
    Configuration eta = eta0;
    double t_prev = 0.0;
    for (const auto& e : traj.events) {
        CHECK(e.time > t_prev);
        t_prev = e.time;
        CHECK(eta[static_cast<std::size_t>(e.from)] >= 1);
        CHECK(e.from != e.to);
        --eta[static_cast<std::size_t>(e.from)];
        ++eta[static_cast<std::size_t>(e.to)];
    }
    CHECK(eta == traj.final_config);
    CHECK_THROWS_AS(simulate(kB4, Configuration{0, 0}, TransitionKernel::ring(2), 1.0, rng),
                    std::domain_error);
}

TEST_CASE("same seed reproduces the same trajectory") {
    Configuration eta0{2, 2, 1};
    const auto kernel = TransitionKernel::uniform_off_diagonal(3);
    RngStream r1(1001), r2(1001);
    const auto a = simulate(kB4, eta0, kernel, 25.0, r1);
    const auto b = simulate(kB4, eta0, kernel, 25.0, r2);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].time == b.events[i].time);
        CHECK(a.events[i].from == b.events[i].from);
        CHECK(a.events[i].to == b.events[i].to);
    }
}

TEST_CASE("self jumps are null events") {
    // kernel with heavy self-loops still advances time but never moves mass
    const auto kernel = TransitionKernel::custom(2, {0.9, 0.1, 0.1, 0.9});
    RngStream rng(8);
    const auto traj = simulate(kB4, {1, 1}, kernel, 20.0, rng);
    CHECK(traj.n_null_events > 0);
    CHECK(total_particles(traj.final_config) == 2);
    for (const auto& e : traj.events) CHECK(e.from != e.to);
}

TEST_CASE("snapshots record the state at the requested times") {
    RngStream rng(4);
    SimulateOptions opts;
    opts.snapshot_times = {0.5, 1.0, 2.0, 5.0};
    const auto traj = simulate(kB4, {4, 0, 1}, TransitionKernel::ring(3), 5.0, rng, opts);
    REQUIRE(traj.snapshots.size() == 4);
    for (const auto& [t, eta] : traj.snapshots) CHECK(total_particles(eta) == 5);
    CHECK(traj.snapshots.back().first == 5.0);
}

TEST_CASE("incremental rate accumulator stays within 1e-9 over 1e6 events") {
    RngStream rng(2025);
    Configuration eta0(100);
    for (std::size_t i = 0; i < 50; ++i) eta0[i] = 6;
    SimulateOptions opts;
    opts.record_events = false;
    opts.rate_resync_interval = std::int64_t{1} << 40;  // never resync during the run
    const auto traj = simulate(kB4, eta0, TransitionKernel::uniform_off_diagonal(100), 11000.0,
                               rng, opts);
    CHECK(traj.n_events + traj.n_null_events > 1'000'000);
    CHECK(traj.rate_drift < 1e-9 * 300.0);  // relative to the typical total rate
}

TEST_CASE("generator matrix on the two-state fiber") {
    const auto kernel = TransitionKernel::custom(2, {0.0, 1.0, 1.0, 0.0});
    const auto gen = generator_matrix(kB4, 2, 1, kernel);
    REQUIRE(gen.size() == 2);
    // states are (0,1) and (1,0); both jump at rate g(1) = 5
    CHECK(gen.diag[0] == doctest::Approx(-5.0).epsilon(1e-14));
    CHECK(gen.diag[1] == doctest::Approx(-5.0).epsilon(1e-14));
    REQUIRE(gen.off_diag[0].size() == 1);
    CHECK(gen.off_diag[0][0].second == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("generator rows sum to zero") {
    const auto gen =
        generator_matrix(kB4, 3, 4, TransitionKernel::uniform_off_diagonal(3));
    for (std::int64_t i = 0; i < gen.size(); ++i) {
        double row = gen.diag[static_cast<std::size_t>(i)];
        for (const auto& [j, r] : gen.off_diag[static_cast<std::size_t>(i)]) row += r;
        CHECK(std::fabs(row) < 1e-12);
    }
}

TEST_CASE("fiber graph is strongly connected for the ring") {
    const auto gen = generator_matrix(kB4, 3, 4, TransitionKernel::ring(3));
    CHECK(fiber_strongly_connected(gen));
}

TEST_CASE("product measure is exactly stationary") {
    CHECK(stationarity_residual(kB4, 2, 3, TransitionKernel::uniform_off_diagonal(2)) < 1e-12);
    CHECK(stationarity_residual(kB4, 3, 4, TransitionKernel::ring(3)) < 1e-10);
    CHECK(stationarity_residual(ModelParams::power_law(2.5), 4, 5, TransitionKernel::ring(4)) <
          1e-10);
    CHECK(stationarity_residual(ModelParams::stretched(1.0, 0.75), 3, 6,
                                TransitionKernel::uniform_off_diagonal(3)) < 1e-10);
    // negative control: a 1% weight perturbation is three orders above that
    CHECK(stationarity_residual(kB4, 3, 4, TransitionKernel::ring(3), 10'000, 1, 1.01) > 1e-4);
}

TEST_CASE("time averages converge to the canonical site marginal") {
    RngStream rng(31415);
    const std::int64_t L = 3, N = 5;
    const auto traj = simulate(kB4, {5, 0, 0}, TransitionKernel::ring(L), 16000.0, rng);
    const auto hist = site_occupancy_time_average(traj, 0, N);
    const auto dist = CanonicalDistribution(
        std::make_shared<const CanonicalTable>(build_canonical_table(kB4, L, N)));
    std::vector<double> exact(static_cast<std::size_t>(N) + 1);
    for (std::int64_t k = 0; k <= N; ++k) exact[static_cast<std::size_t>(k)] = dist.site_marginal(k);
    CHECK(tv_distance(std::span<const double>(hist), std::span<const double>(exact)) < 0.02);
}
