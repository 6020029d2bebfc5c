#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zrp/model.hpp"
#include "zrp/rng.hpp"
#include "zrp/types.hpp"

namespace zrp {

// Doubly stochastic single-particle transition kernel on L sites.
struct TransitionKernel {
    enum class Kind { UniformOffDiagonal, RingNearestNeighbor, Custom };

    Kind kind = Kind::UniformOffDiagonal;
    std::int64_t L = 0;
    std::vector<double> matrix;  // Custom only, row-major L x L

    static TransitionKernel uniform_off_diagonal(std::int64_t L);
    static TransitionKernel ring(std::int64_t L);
    // Validates double stochasticity (row/column sums within 1e-12) and
    // irreducibility of the induced walk.
    static TransitionKernel custom(std::int64_t L, std::vector<double> matrix);

    double prob(std::int64_t x, std::int64_t y) const;
    std::int64_t sample_target(std::int64_t from, RngStream& rng) const;
    std::string name() const;
};

struct Event {
    double time;
    std::int32_t from, to;
};

struct Trajectory {
    Configuration initial;
    std::vector<Event> events;  // self-jumps are executed as null events and not recorded
    Configuration final_config;
    double t_end = 0.0;
    std::int64_t n_events = 0;       // recorded particle moves
    std::int64_t n_null_events = 0;  // self-jump clock ticks
    double rate_drift = 0.0;         // |incremental - recomputed| total rate at t_end
    std::vector<std::pair<double, Configuration>> snapshots;
};

struct GillespieStep {
    double dt;
    std::int64_t from, to;
};

// One jump of the process: waiting time Exponential(sum_x g(eta_x)), departure
// site chosen proportionally to g(eta_x), target from p(from, .).
GillespieStep gillespie_step(const ModelParams& params, const Configuration& eta,
                             const TransitionKernel& kernel, RngStream& rng);

struct SimulateOptions {
    bool record_events = true;
    std::int64_t rate_resync_interval = std::int64_t{1} << 20;
    std::vector<double> snapshot_times;  // state recorded at these times
};

// Event-driven simulation to t_end with an O(log L) rate index; the total-rate
// accumulator is maintained incrementally and recomputed exactly every
// rate_resync_interval events to cancel floating-point drift.
Trajectory simulate(const ModelParams& params, const Configuration& eta0,
                    const TransitionKernel& kernel, double t_end, RngStream& rng,
                    SimulateOptions opts = {});

// Fraction of time a site spends at each occupancy, from a recorded trajectory.
std::vector<double> site_occupancy_time_average(const Trajectory& traj, std::int64_t site,
                                                std::int64_t max_k);

// Generator of the process restricted to the fiber {S_L = N}, stored sparsely:
// off-diagonal rate (eta -> eta^{x -> y}) = g(eta_x) p(x,y), diagonal =
// -(row sum).
struct GeneratorMatrix {
    std::vector<Configuration> fiber;
    std::vector<std::vector<std::pair<std::int64_t, double>>> off_diag;
    std::vector<double> diag;
    std::int64_t size() const { return static_cast<std::int64_t>(fiber.size()); }
};

GeneratorMatrix generator_matrix(const ModelParams& params, std::int64_t L, std::int64_t N,
                                 const TransitionKernel& kernel,
                                 std::int64_t fiber_cap = 10'000);

// Max-norm of mu Q where mu(eta) is proportional to prod_x W(eta_x); exactly
// stationary measures give values at double-precision rounding level.
// perturb_index >= 0 multiplies that weight by perturb_factor first (negative
// control hook).
double stationarity_residual(const ModelParams& params, std::int64_t L, std::int64_t N,
                             const TransitionKernel& kernel, std::int64_t fiber_cap = 10'000,
                             std::int64_t perturb_index = -1, double perturb_factor = 1.0);

// True when every fiber configuration is reachable from every other through
// single-particle moves of the kernel.
bool fiber_strongly_connected(const GeneratorMatrix& gen);

}  // namespace zrp
