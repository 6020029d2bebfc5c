#include "zrp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_map>

#include "zrp/exact.hpp"
#include "zrp/special.hpp"

namespace zrp {

// ---------------------------------------------------------------------------
// TransitionKernel
// ---------------------------------------------------------------------------

TransitionKernel TransitionKernel::uniform_off_diagonal(std::int64_t L) {
    if (L < 2) throw std::domain_error("uniform_off_diagonal: L >= 2 required");
    TransitionKernel k;
    k.kind = Kind::UniformOffDiagonal;
    k.L = L;
    return k;
}

TransitionKernel TransitionKernel::ring(std::int64_t L) {
    if (L < 2) throw std::domain_error("ring: L >= 2 required");
    TransitionKernel k;
    k.kind = Kind::RingNearestNeighbor;
    k.L = L;
    return k;
}

TransitionKernel TransitionKernel::custom(std::int64_t L, std::vector<double> matrix) {
    if (L < 1 || static_cast<std::int64_t>(matrix.size()) != L * L)
        throw std::domain_error("custom kernel: matrix must be L x L");
    for (const double p : matrix)
        if (!(p >= 0.0)) throw std::domain_error("custom kernel: negative entry");
    for (std::int64_t x = 0; x < L; ++x) {
        double row = 0.0, col = 0.0;
        for (std::int64_t y = 0; y < L; ++y) {
            row += matrix[static_cast<std::size_t>(x * L + y)];
            col += matrix[static_cast<std::size_t>(y * L + x)];
        }
        if (std::fabs(row - 1.0) > 1e-12 || std::fabs(col - 1.0) > 1e-12)
            throw std::domain_error("custom kernel: not doubly stochastic within 1e-12");
    }
    // irreducibility of the induced walk: strong connectivity on p > 0 edges
    auto reaches_all = [&](bool forward) {
        std::vector<char> seen(static_cast<std::size_t>(L), 0);
        std::queue<std::int64_t> q;
        q.push(0);
        seen[0] = 1;
        std::int64_t count = 1;
        while (!q.empty()) {
            const std::int64_t x = q.front();
            q.pop();
            for (std::int64_t y = 0; y < L; ++y) {
                const double p = forward ? matrix[static_cast<std::size_t>(x * L + y)]
                                         : matrix[static_cast<std::size_t>(y * L + x)];
                if (p > 0.0 && x != y && !seen[static_cast<std::size_t>(y)]) {
                    seen[static_cast<std::size_t>(y)] = 1;
                    ++count;
                    q.push(y);
                }
            }
        }
        return count == L;
    };
    if (L > 1 && (!reaches_all(true) || !reaches_all(false)))
        throw std::domain_error("custom kernel: induced walk is not irreducible");
    TransitionKernel k;
    k.kind = Kind::Custom;
    k.L = L;
    k.matrix = std::move(matrix);
    return k;
}

double TransitionKernel::prob(std::int64_t x, std::int64_t y) const {
    if (x < 0 || x >= L || y < 0 || y >= L) throw std::domain_error("kernel prob: site out of range");
    switch (kind) {
        case Kind::UniformOffDiagonal:
            return x == y ? 0.0 : 1.0 / static_cast<double>(L - 1);
        case Kind::RingNearestNeighbor: {
            double p = 0.0;
            if ((x + 1) % L == y) p += 0.5;
            if ((x - 1 + L) % L == y) p += 0.5;
            return p;
        }
        case Kind::Custom:
            return matrix[static_cast<std::size_t>(x * L + y)];
    }
    return 0.0;
}

std::int64_t TransitionKernel::sample_target(std::int64_t from, RngStream& rng) const {
    switch (kind) {
        case Kind::UniformOffDiagonal: {
            auto j = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(L - 1)));
            return j + (j >= from ? 1 : 0);
        }
        case Kind::RingNearestNeighbor: {
            const bool right = rng.next_below(2) == 0;
            return right ? (from + 1) % L : (from - 1 + L) % L;
        }
        case Kind::Custom: {
            const double u = rng.next_double();
            double cum = 0.0;
            for (std::int64_t y = 0; y < L; ++y) {
                cum += matrix[static_cast<std::size_t>(from * L + y)];
                if (cum > u) return y;
            }
            return L - 1;
        }
    }
    return from;
}

std::string TransitionKernel::name() const {
    switch (kind) {
        case Kind::UniformOffDiagonal:
            return "uniform";
        case Kind::RingNearestNeighbor:
            return "ring";
        case Kind::Custom:
            return "custom";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Gillespie
// ---------------------------------------------------------------------------

GillespieStep gillespie_step(const ModelParams& params, const Configuration& eta,
                             const TransitionKernel& kernel, RngStream& rng) {
    if (static_cast<std::int64_t>(eta.size()) != kernel.L)
        throw std::domain_error("gillespie_step: configuration/kernel size mismatch");
    double total = 0.0;
    for (const auto v : eta) total += jump_rate(params, v);
    if (!(total > 0.0)) throw std::domain_error("gillespie_step: empty configuration");
    const double dt = rng.next_exponential(total);
    const double target = rng.next_double() * total;
    double cum = 0.0;
    std::int64_t from = static_cast<std::int64_t>(eta.size()) - 1;
    for (std::size_t x = 0; x < eta.size(); ++x) {
        cum += jump_rate(params, eta[x]);
        if (cum > target) {
            from = static_cast<std::int64_t>(x);
            break;
        }
    }
    return {dt, from, kernel.sample_target(from, rng)};
}

namespace {

// Fenwick tree over per-site rates: O(log L) update and inverse-prefix search.
class RateIndex {
public:
    explicit RateIndex(const std::vector<double>& rates) : n_(rates.size()), v_(rates) {
        tree_.assign(n_ + 1, 0.0);
        for (std::size_t i = 0; i < n_; ++i) raw_add(i, rates[i]);
        top_bit_ = 1;
        while ((top_bit_ << 1) <= n_) top_bit_ <<= 1;
    }

    void set(std::size_t i, double value) {
        raw_add(i, value - v_[i]);
        v_[i] = value;
    }

    double value(std::size_t i) const { return v_[i]; }

    double total() const { return prefix(n_); }

    // index i with prefix(i) <= target < prefix(i+1)
    std::size_t find(double target) const {
        std::size_t pos = 0;
        double rest = target;
        for (std::size_t mask = top_bit_; mask > 0; mask >>= 1) {
            const std::size_t next = pos + mask;
            if (next <= n_ && tree_[next] <= rest) {
                rest -= tree_[next];
                pos = next;
            }
        }
        return pos < n_ ? pos : n_ - 1;
    }

    void rebuild(const std::vector<double>& rates) {
        v_ = rates;
        std::fill(tree_.begin(), tree_.end(), 0.0);
        for (std::size_t i = 0; i < n_; ++i) raw_add(i, rates[i]);
    }

private:
    void raw_add(std::size_t i, double delta) {
        for (std::size_t j = i + 1; j <= n_; j += j & (~j + 1)) tree_[j] += delta;
    }
    double prefix(std::size_t count) const {
        double s = 0.0;
        for (std::size_t j = count; j > 0; j -= j & (~j + 1)) s += tree_[j];
        return s;
    }

    std::size_t n_;
    std::vector<double> v_;
    std::vector<double> tree_;
    std::size_t top_bit_ = 1;
};

}  // namespace

Trajectory simulate(const ModelParams& params, const Configuration& eta0,
                    const TransitionKernel& kernel, double t_end, RngStream& rng,
                    SimulateOptions opts) {
    if (!(t_end > 0.0)) throw std::domain_error("simulate: t_end > 0 required");
    if (static_cast<std::int64_t>(eta0.size()) != kernel.L)
        throw std::domain_error("simulate: configuration/kernel size mismatch");
    if (total_particles(eta0) < 1) throw std::domain_error("simulate: empty configuration");

    Trajectory traj;
    traj.initial = eta0;
    traj.t_end = t_end;

    Configuration eta = eta0;
    const std::size_t L = eta.size();
    std::vector<double> rates(L);
    for (std::size_t x = 0; x < L; ++x) rates[x] = jump_rate(params, eta[x]);
    RateIndex index(rates);
    double total_rate = 0.0;
    for (const double r : rates) total_rate += r;

    std::vector<double> snaps = opts.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;

    double t = 0.0;
    std::int64_t events_since_resync = 0;
    while (true) {
        const double dt = rng.next_exponential(total_rate);
        const double t_next = t + dt;
        // state is constant on [t, t_next); snapshots in that window see it
        while (next_snap < snaps.size() && snaps[next_snap] < t_next &&
               snaps[next_snap] <= t_end) {
            traj.snapshots.emplace_back(snaps[next_snap], eta);
            ++next_snap;
        }
        if (t_next > t_end) break;
        t = t_next;
        std::int64_t from = static_cast<std::int64_t>(index.find(rng.next_double() * total_rate));
        // rounding can land the search on an empty site boundary; step past it
        while (index.value(static_cast<std::size_t>(from)) <= 0.0)
            from = (from + 1) % static_cast<std::int64_t>(L);
        const std::int64_t to = kernel.sample_target(from, rng);
        if (to == from) {
            ++traj.n_null_events;  // permitted self-jump: clock ticks, state unchanged
        } else {
            const double old_from = index.value(static_cast<std::size_t>(from));
            const double old_to = index.value(static_cast<std::size_t>(to));
            --eta[static_cast<std::size_t>(from)];
            ++eta[static_cast<std::size_t>(to)];
            const double new_from = jump_rate(params, eta[static_cast<std::size_t>(from)]);
            const double new_to = jump_rate(params, eta[static_cast<std::size_t>(to)]);
            index.set(static_cast<std::size_t>(from), new_from);
            index.set(static_cast<std::size_t>(to), new_to);
            total_rate += (new_from - old_from) + (new_to - old_to);
            ++traj.n_events;
            if (opts.record_events)
                traj.events.push_back(
                    {t, static_cast<std::int32_t>(from), static_cast<std::int32_t>(to)});
        }
        if (++events_since_resync >= opts.rate_resync_interval) {
            for (std::size_t x = 0; x < L; ++x) rates[x] = jump_rate(params, eta[x]);
            index.rebuild(rates);
            total_rate = 0.0;
            for (const double r : rates) total_rate += r;
            events_since_resync = 0;
        }
    }
    while (next_snap < snaps.size() && snaps[next_snap] <= t_end) {
        traj.snapshots.emplace_back(snaps[next_snap], eta);
        ++next_snap;
    }
    double exact_rate = 0.0;
    for (const auto v : eta) exact_rate += jump_rate(params, v);
    traj.rate_drift = std::fabs(total_rate - exact_rate);
    traj.final_config = eta;
    return traj;
}

std::vector<double> site_occupancy_time_average(const Trajectory& traj, std::int64_t site,
                                                std::int64_t max_k) {
    std::vector<double> hist(static_cast<std::size_t>(max_k) + 1, 0.0);
    std::int64_t k = traj.initial[static_cast<std::size_t>(site)];
    double t_prev = 0.0;
    auto bucket = [&](std::int64_t v) { return static_cast<std::size_t>(std::min(v, max_k)); };
    for (const auto& e : traj.events) {
        if (e.from == site || e.to == site) {
            hist[bucket(k)] += e.time - t_prev;
            t_prev = e.time;
            k += (e.to == site) - (e.from == site);
        }
    }
    hist[bucket(k)] += traj.t_end - t_prev;
    for (auto& h : hist) h /= traj.t_end;
    return hist;
}

// ---------------------------------------------------------------------------
// Generator matrix and stationarity
// ---------------------------------------------------------------------------

namespace {
struct ConfigHash {
    std::size_t operator()(const Configuration& c) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto v : c) {
            h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }
};
}  // namespace

GeneratorMatrix generator_matrix(const ModelParams& params, std::int64_t L, std::int64_t N,
                                 const TransitionKernel& kernel, std::int64_t fiber_cap) {
    if (kernel.L != L) throw std::domain_error("generator_matrix: kernel size mismatch");
    GeneratorMatrix gen;
    gen.fiber = enumerate_fiber(L, N, fiber_cap);
    std::unordered_map<Configuration, std::int64_t, ConfigHash> index;
    index.reserve(gen.fiber.size() * 2);
    for (std::size_t i = 0; i < gen.fiber.size(); ++i)
        index.emplace(gen.fiber[i], static_cast<std::int64_t>(i));
    gen.off_diag.resize(gen.fiber.size());
    gen.diag.assign(gen.fiber.size(), 0.0);
    for (std::size_t i = 0; i < gen.fiber.size(); ++i) {
        Configuration eta = gen.fiber[i];
        double out_rate = 0.0;
        for (std::int64_t x = 0; x < L; ++x) {
            if (eta[static_cast<std::size_t>(x)] == 0) continue;
            const double g = jump_rate(params, eta[static_cast<std::size_t>(x)]);
            for (std::int64_t y = 0; y < L; ++y) {
                if (y == x) continue;  // self-jumps cancel in the generator
                const double p = kernel.prob(x, y);
                if (p <= 0.0) continue;
                --eta[static_cast<std::size_t>(x)];
                ++eta[static_cast<std::size_t>(y)];
                const auto it = index.find(eta);
                ++eta[static_cast<std::size_t>(x)];
                --eta[static_cast<std::size_t>(y)];
                gen.off_diag[i].emplace_back(it->second, g * p);
                out_rate += g * p;
            }
        }
        gen.diag[i] = -out_rate;
    }
    return gen;
}

bool fiber_strongly_connected(const GeneratorMatrix& gen) {
    const auto n = static_cast<std::size_t>(gen.size());
    if (n == 0) return false;
    // forward reachability, then reachability in the reversed graph
    std::vector<std::vector<std::int64_t>> rev(n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [j, r] : gen.off_diag[i])
            if (r > 0.0) rev[static_cast<std::size_t>(j)].push_back(static_cast<std::int64_t>(i));
    auto bfs = [&](bool forward) {
        std::vector<char> seen(n, 0);
        std::queue<std::size_t> q;
        q.push(0);
        seen[0] = 1;
        std::size_t count = 1;
        while (!q.empty()) {
            const std::size_t i = q.front();
            q.pop();
            if (forward) {
                for (const auto& [j, r] : gen.off_diag[i])
                    if (r > 0.0 && !seen[static_cast<std::size_t>(j)]) {
                        seen[static_cast<std::size_t>(j)] = 1;
                        ++count;
                        q.push(static_cast<std::size_t>(j));
                    }
            } else {
                for (const auto j : rev[i])
                    if (!seen[static_cast<std::size_t>(j)]) {
                        seen[static_cast<std::size_t>(j)] = 1;
                        ++count;
                        q.push(static_cast<std::size_t>(j));
                    }
            }
        }
        return count == n;
    };
    return bfs(true) && bfs(false);
}

double stationarity_residual(const ModelParams& params, std::int64_t L, std::int64_t N,
                             const TransitionKernel& kernel, std::int64_t fiber_cap,
                             std::int64_t perturb_index, double perturb_factor) {
    const GeneratorMatrix gen = generator_matrix(params, L, N, kernel, fiber_cap);
    const WeightTable wt = build_weight_table(params, std::max<std::int64_t>(N, 1));
    const auto n = static_cast<std::size_t>(gen.size());
    // mu(eta) proportional to prod_x W(eta_x); perturb_index >= 0 scales the
    // single-site weight W(perturb_index) as a negative control
    std::vector<double> mu(n);
    double norm = 0.0;
    const double log_perturb = std::log(perturb_factor);
    for (std::size_t i = 0; i < n; ++i) {
        double lp = 0.0;
        for (const auto v : gen.fiber[i]) {
            lp += wt.logw[static_cast<std::size_t>(v)];
            if (v == perturb_index) lp += log_perturb;
        }
        mu[i] = std::exp(lp);
        norm += mu[i];
    }
    for (auto& m : mu) m /= norm;
    std::vector<double> residual(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        residual[i] += mu[i] * gen.diag[i];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [j, r] : gen.off_diag[i]) residual[static_cast<std::size_t>(j)] += mu[i] * r;
    double mx = 0.0;
    for (const double r : residual) mx = std::max(mx, std::fabs(r));
    return mx;
}

}  // namespace zrp
