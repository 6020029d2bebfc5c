// zrp: batch driver for zero-range condensation computations, samplers,
// dynamics, and limit-law experiments.  Every run is reproducible from the
// echoed configuration (seed included); reports are schema-versioned JSON.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zrp/dynamics.hpp"
#include "zrp/exact.hpp"
#include "zrp/experiments.hpp"
#include "zrp/limits.hpp"
#include "zrp/model.hpp"
#include "zrp/report.hpp"
#include "zrp/sampling.hpp"
#include "zrp/special.hpp"
#include "zrp/stable.hpp"
#include "zrp/tolerances.hpp"

using json = nlohmann::json;
using namespace zrp;

namespace {

// exit codes: 0 ok, 1 assertion/statistical failure, 2 usage/domain error,
// 3 resource limit, 4 regime violation
enum ExitCode { kOk = 0, kAssertFailed = 1, kUsage = 2, kResource = 3, kRegime = 4 };

struct CommonOpts {
    std::string family = "power_law";
    double b = 4.0;
    double beta = 1.0;
    double lambda = 0.75;
    std::uint64_t seed = 1;
    std::string json_out = "-";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--family", opts.family, "rate family: power_law or stretched")
        ->check(CLI::IsMember({"power_law", "stretched"}));
    cmd->add_option("-b,--b", opts.b, "power-law exponent b > 2");
    cmd->add_option("--beta", opts.beta, "stretched amplitude beta > 0");
    cmd->add_option("--lambda", opts.lambda, "stretched exponent in (1/2, 1)");
    cmd->add_option("--seed", opts.seed, "rng seed (always recorded)");
    cmd->add_option("--json-out", opts.json_out, "report path ('-' = stdout)");
}

ModelParams resolve_params(const CommonOpts& opts) {
    return opts.family == "power_law" ? ModelParams::power_law(opts.b)
                                      : ModelParams::stretched(opts.beta, opts.lambda);
}

json config_echo(const CommonOpts& opts) {
    json j;
    j["params"] = params_to_json(resolve_params(opts));
    j["seed"] = opts.seed;
    return j;
}

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::shared_ptr<const CanonicalTable> table_with_cache(const ModelParams& params, std::int64_t L,
                                                       std::int64_t N,
                                                       const std::string& cache_dir,
                                                       bool full = true) {
    std::string path;
    if (!cache_dir.empty()) {
        path = cache_dir + "/qtable_" + params.cache_key() + "_L" + std::to_string(L) + "_N" +
               std::to_string(N) + (full ? "_full" : "_roll") + ".bin";
        std::FILE* f = std::fopen(path.c_str(), "rb");
        if (f) {
            std::fclose(f);
            return std::make_shared<const CanonicalTable>(CanonicalTable::load(path));
        }
    }
    BuildOptions opts;
    opts.full = full;
    auto table = std::make_shared<const CanonicalTable>(build_canonical_table(params, L, N, opts));
    if (!path.empty()) table->save(path);
    return table;
}

// ---------------------------------------------------------------------------
// verify-identities
// ---------------------------------------------------------------------------

int cmd_verify_identities(const CommonOpts& opts, double perturb) {
    const auto params = resolve_params(opts);
    json report = make_report("verify-identities");
    report["config"] = config_echo(opts);
    report["config"]["perturb"] = perturb;
    json checks = json::array();
    bool all_pass = true;
    auto record = [&](const std::string& name, double value, double threshold, bool pass) {
        checks.push_back(
            {{"name", name}, {"value", value}, {"threshold", threshold}, {"pass", pass}});
        all_pass &= pass;
    };

    // closed forms vs independent series routes
    if (params.family == RateFamily::PowerLaw) {
        const auto closed = critical_constants(params);
        const auto series = critical_constants_series(params);
        record("Z_c series vs closed", std::fabs(series.Z_c - closed.Z_c), tol::kIdentityAbs,
               std::fabs(series.Z_c - closed.Z_c) < tol::kIdentityAbs);
        record("rho_c series vs closed", std::fabs(series.rho_c - closed.rho_c), tol::kIdentityAbs,
               std::fabs(series.rho_c - closed.rho_c) < tol::kIdentityAbs);
        if (std::isfinite(closed.sigma2)) {
            record("sigma2 series vs closed", std::fabs(series.sigma2 - closed.sigma2),
                   tol::kIdentityAbs, std::fabs(series.sigma2 - closed.sigma2) < tol::kIdentityAbs);
        } else {
            report["sigma2"] = "+inf";
            record("sigma2 diverges consistently", std::isinf(series.sigma2) ? 0.0 : 1.0, 0.5,
                   std::isinf(series.sigma2));
        }
    }

    // weight table normalization and recursion (fault injection lands here)
    {
        const auto wt = build_weight_table(params, 2000);
        double mass = 0.0;
        for (const double w : wt.w) mass += w;
        const double norm_gap = std::fabs(mass + wt.tail[wt.tail.size() - 1] - 1.0) +
                                (perturb > 0.0 ? perturb : 0.0);
        record("weight normalization", norm_gap, tol::kWeightNormalization,
               norm_gap < tol::kWeightNormalization);
        double worst = 0.0;
        for (std::int64_t k = 1; k <= wt.kmax; ++k) {
            const double lhs = wt.w[static_cast<std::size_t>(k)] * jump_rate(params, k);
            const double rhs = wt.w[static_cast<std::size_t>(k - 1)];
            worst = std::max(worst, std::fabs(lhs - rhs) / rhs);
        }
        record("weight recursion", worst, tol::kRecursionRel, worst < tol::kRecursionRel);
    }

    // hypergeometric identity grid
    {
        double worst = 0.0;
        for (const double u : {0.5, 1.0, 1.7, 2.3}) {
            for (const double gap : {2.0, 3.0, 5.0, 8.0, 16.0}) {
                const double v = 0.8 + 0.3 * u;
                const double w = u + v + gap;
                worst = std::max(
                    worst, std::fabs(hypergeometric_sum(u, v, w) - hypergeometric_series(u, v, w)));
            }
        }
        record("hypergeometric identity (20-point grid)", worst, tol::kIdentityAbs,
               worst < tol::kIdentityAbs);
    }

    // exact tail formula vs direct summation (power law)
    if (params.family == RateFamily::PowerLaw) {
        const auto wt = build_weight_table(params, 1000);
        const double b = params.b;
        // summation horizon from the smoothness bound W(k) <= W(K)(K/k)^b,
        // which caps the remainder past K by W(K) K / (b-1)
        std::int64_t horizon = 4096;
        while (std::exp(log_weight_closed_form(params, horizon)) * static_cast<double>(horizon) /
                   (b - 1.0) >
               1e-11)
            horizon *= 2;
        double acc = 0.0;
        std::vector<double> direct(1002, 0.0);
        double w = std::exp(log_weight_closed_form(params, horizon));
        for (std::int64_t k = horizon; k >= 0; --k) {
            acc += w;
            if (k <= 1001) direct[static_cast<std::size_t>(k)] = acc;
            if (k > 0) w *= (static_cast<double>(k) + b) / static_cast<double>(k);
        }
        double worst = 0.0;
        for (std::int64_t m = 0; m <= 1000; ++m)
            worst = std::max(
                worst, std::fabs(direct[static_cast<std::size_t>(m)] - std::exp(wt.log_tail(m))));
        record("exact tail vs direct summation (m <= 1000)", worst, tol::kIdentityAbs,
               worst < tol::kIdentityAbs);
    }

    // smoothness sandwich on a randomized grid
    {
        const auto wt = build_weight_table(params, 512);
        RngStream rng(opts.seed);
        bool ok = true;
        for (int rep = 0; rep < 500; ++rep) {
            const auto k1 = static_cast<std::int64_t>(rng.next_below(512));
            const auto k2 = k1 + static_cast<std::int64_t>(
                                     rng.next_below(static_cast<std::uint64_t>(512 - k1 + 1)));
            const auto [lo, hi] = smoothness_bounds(wt, k1, k2);
            const double w2 = wt.w[static_cast<std::size_t>(k2)];
            ok &= (w2 >= lo * (1.0 - 1e-12) && w2 <= hi * (1.0 + 1e-12));
        }
        record("smoothness sandwich (500 random pairs)", ok ? 0.0 : 1.0, 0.5, ok);
    }

    // generator stationarity on small fibers
    {
        double worst = 0.0;
        for (const auto& [L, N] : {std::pair<std::int64_t, std::int64_t>{2, 3}, {3, 4}, {4, 5}}) {
            for (const auto& kernel :
                 {TransitionKernel::uniform_off_diagonal(L), TransitionKernel::ring(L)}) {
                const std::int64_t idx = perturb > 0.0 ? 1 : -1;
                worst = std::max(worst, stationarity_residual(params, L, N, kernel, 10'000, idx,
                                                              1.0 + perturb));
            }
        }
        record("stationarity residual (small fibers)", worst, tol::kStationarityResidual,
               worst < tol::kStationarityResidual);
    }

    report["checks"] = checks;
    report["pass"] = all_pass;
    emit_report(report, opts.json_out);
    return all_pass ? kOk : kAssertFailed;
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

int cmd_sample(const CommonOpts& opts, const std::string& sampler, std::int64_t L, std::int64_t N,
               double rho, std::int64_t n, const std::string& out, const std::string& format,
               const std::string& cache_dir, std::int64_t rejection_cap) {
    const auto params = resolve_params(opts);
    if (N < 0) {
        if (rho <= 0.0) throw std::domain_error("sample: --n-particles or --rho required");
        N = static_cast<std::int64_t>(std::llround(rho * static_cast<double>(L)));
    }
    SampleBatch batch;
    batch.params = params;
    batch.L = L;
    batch.N = N;
    batch.seed = opts.seed;
    batch.stream_id = 0;
    batch.sampler_id = sampler;
    batch.configs.reserve(static_cast<std::size_t>(n));
    RngStream rng(opts.seed, 0);

    json report = make_report("sample");
    report["config"] = config_echo(opts);
    report["config"]["sampler"] = sampler;
    report["config"]["L"] = L;
    report["config"]["N"] = N;
    report["config"]["n_samples"] = n;

    const double t0 = now_s();
    if (sampler == "exact") {
        const CanonicalDistribution dist(table_with_cache(params, L, N, cache_dir));
        const double t_build = now_s();
        report["table_build_seconds"] = t_build - t0;
        for (std::int64_t i = 0; i < n; ++i)
            batch.configs.push_back(sample_canonical_exact(dist, rng));
        report["throughput_configs_per_sec"] =
            static_cast<double>(n) / std::max(1e-9, now_s() - t_build);
    } else if (sampler == "condensate") {
        const auto wt = build_weight_table(params, default_kmax(params));
        CondensateStats stats;
        const double t_build = now_s();
        for (std::int64_t i = 0; i < n; ++i)
            batch.configs.push_back(sample_canonical_condensate(wt, L, N, rng, &stats));
        report["throughput_configs_per_sec"] =
            static_cast<double>(n) / std::max(1e-9, now_s() - t_build);
        report["rejection_rate"] = stats.rejection_rate();
        report["regime_warning"] = stats.regime_warning;
    } else if (sampler == "rejection") {
        const auto wt = build_weight_table(params, default_kmax(params));
        std::int64_t attempts = 0;
        const double t_build = now_s();
        for (std::int64_t i = 0; i < n; ++i) {
            auto draw = sample_canonical_rejection(wt, L, N, rng, rejection_cap);
            attempts += draw.attempts;
            batch.configs.push_back(std::move(draw.config));
        }
        report["throughput_configs_per_sec"] =
            static_cast<double>(n) / std::max(1e-9, now_s() - t_build);
        report["acceptance_rate"] = static_cast<double>(n) / static_cast<double>(attempts);
    } else {  // iid
        const auto wt = build_weight_table(params, default_kmax(params));
        const double t_build = now_s();
        for (std::int64_t i = 0; i < n; ++i) {
            Configuration eta(static_cast<std::size_t>(L));
            for (auto& v : eta) v = static_cast<std::int32_t>(sample_critical_marginal(wt, rng));
            batch.configs.push_back(std::move(eta));
        }
        report["throughput_configs_per_sec"] =
            static_cast<double>(n) / std::max(1e-9, now_s() - t_build);
    }

    if (format == "csv")
        batch.write_csv(out);
    else
        batch.write_binary(out);
    report["output"] = out;
    report["format"] = format;
    report["content_hash"] = batch.content_hash();
    report["pass"] = true;
    emit_report(report, opts.json_out);
    return kOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const CommonOpts& opts, std::int64_t L, std::int64_t N,
                 const std::string& kernel_name, double t_end, const std::string& events_out,
                 const std::string& snapshots_out, int n_snapshots, bool check_marginal) {
    const auto params = resolve_params(opts);
    const auto kernel = kernel_name == "ring" ? TransitionKernel::ring(L)
                                              : TransitionKernel::uniform_off_diagonal(L);
    // deterministic start: particles spread as evenly as possible
    Configuration eta0(static_cast<std::size_t>(L));
    for (std::int64_t i = 0; i < N; ++i) ++eta0[static_cast<std::size_t>(i % L)];
    RngStream rng(opts.seed);
    SimulateOptions sim_opts;
    sim_opts.record_events = true;
    for (int i = 1; i <= n_snapshots; ++i)
        sim_opts.snapshot_times.push_back(t_end * static_cast<double>(i) /
                                          static_cast<double>(n_snapshots));

    const double t0 = now_s();
    const auto traj = simulate(params, eta0, kernel, t_end, rng, sim_opts);
    const double elapsed = now_s() - t0;

    json report = make_report("simulate");
    report["config"] = config_echo(opts);
    report["config"]["L"] = L;
    report["config"]["N"] = N;
    report["config"]["kernel"] = kernel.name();
    report["config"]["t_end"] = t_end;
    report["n_events"] = traj.n_events;
    report["n_null_events"] = traj.n_null_events;
    report["events_per_sec"] =
        static_cast<double>(traj.n_events + traj.n_null_events) / std::max(1e-9, elapsed);
    report["rate_drift"] = traj.rate_drift;
    bool pass = true;
    json snaps = json::array();
    for (const auto& [t, eta] : traj.snapshots) {
        snaps.push_back({{"time", t}, {"total", total_particles(eta)}});
        pass &= total_particles(eta) == N;
    }
    report["snapshots"] = snaps;

    if (!events_out.empty()) {
        std::FILE* f = std::fopen(events_out.c_str(), "w");
        if (!f) throw std::runtime_error("cannot open " + events_out);
        std::fprintf(f, "# zrp-trajectory v1 L=%lld N=%lld t_end=%g kernel=%s seed=%llu\n",
                     static_cast<long long>(L), static_cast<long long>(N), t_end,
                     kernel.name().c_str(), static_cast<unsigned long long>(opts.seed));
        std::fprintf(f, "# initial=");
        for (std::size_t x = 0; x < traj.initial.size(); ++x)
            std::fprintf(f, "%s%d", x ? "," : "", traj.initial[x]);
        std::fprintf(f, "\ntime,from,to\n");
        for (const auto& e : traj.events) std::fprintf(f, "%.9f,%d,%d\n", e.time, e.from, e.to);
        std::fclose(f);
        report["events_out"] = events_out;
    }

    if (!snapshots_out.empty()) {
        std::FILE* f = std::fopen(snapshots_out.c_str(), "w");
        if (!f) throw std::runtime_error("cannot open " + snapshots_out);
        std::fprintf(f, "# zrp-snapshots v1 L=%lld N=%lld\n", static_cast<long long>(L),
                     static_cast<long long>(N));
        for (const auto& [t, eta] : traj.snapshots) {
            std::fprintf(f, "%.9f", t);
            for (const auto v : eta) std::fprintf(f, ",%d", v);
            std::fprintf(f, "\n");
        }
        std::fclose(f);
        report["snapshots_out"] = snapshots_out;
    }

    if (check_marginal) {
        const CanonicalDistribution dist(
            std::make_shared<const CanonicalTable>(build_canonical_table(params, L, N)));
        const auto hist = site_occupancy_time_average(traj, 0, N);
        std::vector<double> exact(static_cast<std::size_t>(N) + 1);
        for (std::int64_t k = 0; k <= N; ++k)
            exact[static_cast<std::size_t>(k)] = dist.site_marginal(k);
        const double tv =
            tv_distance(std::span<const double>(hist), std::span<const double>(exact));
        report["occupancy_tv_vs_exact"] = tv;
        report["occupancy_tv_threshold"] = 0.02;
        pass &= tv < 0.02;
    }
    report["pass"] = pass;
    emit_report(report, opts.json_out);
    return pass ? kOk : kAssertFailed;
}

// ---------------------------------------------------------------------------
// limit-test (also backs the llt-ratio and threshold-scan subcommands)
// ---------------------------------------------------------------------------

json trend_to_json(const LltTrend& t) {
    json j;
    j["L"] = t.Ls;
    j["N"] = t.Ns;
    j["ratios"] = t.ratios;
    j["strictly_decreasing"] = t.strictly_decreasing;
    j["final_gap"] = t.final_gap;
    j["final_within_band"] = t.final_within_band;
    return j;
}

std::vector<std::int64_t> parse_grid(const std::string& arg) {
    std::vector<std::int64_t> grid;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(std::stoll(item));
    return grid;
}

struct LimitTols {
    double ks = -1.0;    // < 0: use the documented default for the experiment
    double tv = -1.0;
    double corr = -1.0;
    double ks_for(double fallback) const { return ks > 0.0 ? ks : fallback; }
    double tv_for(double fallback) const { return tv > 0.0 ? tv : fallback; }
    double corr_for(double fallback) const { return corr > 0.0 ? corr : fallback; }
};

int cmd_limit_test(const CommonOpts& opts, const std::string& experiment, std::int64_t L,
                   double rho, std::int64_t n, const std::string& cache_dir, double gamma,
                   const std::string& l_grid_arg, const LimitTols& tols) {
    const auto params = resolve_params(opts);
    json report = make_report("limit-test");
    report["config"] = config_echo(opts);
    report["config"]["experiment"] = experiment;
    report["config"]["L"] = L;
    report["config"]["rho"] = rho;
    report["config"]["n_samples"] = n;
    bool pass = true;

    auto l_grid = parse_grid(l_grid_arg);
    const auto cc = critical_constants(params);
    const auto N = static_cast<std::int64_t>(std::llround(rho * static_cast<double>(L)));

    if (experiment == "max-clt") {
        const CanonicalDistribution dist(table_with_cache(params, L, N, cache_dir));
        const auto batch = collect_exact_batch(dist, n, opts.seed);
        const double threshold =
            tols.ks_for(params.b == 3.0 ? tol::kKsGaussianB3 : tol::kKsGaussian);
        const auto ks = ks_check(
            batch.centered_max, [](double x) { return normal_cdf(x); }, threshold,
            "standard normal");
        report["ks"] = ks.ks;
        report["threshold"] = ks.threshold;
        pass = ks.pass;
    } else if (experiment == "max-stable") {
        const StableLaw law(params.b - 1.0);
        const CanonicalDistribution dist(table_with_cache(params, L, N, cache_dir));
        const auto batch = collect_exact_batch(dist, n, opts.seed);
        const auto ks = ks_check(
            batch.centered_max, [&law](double x) { return law.cdf(x); },
            tols.ks_for(tol::kKsStable), "completely asymmetric stable");
        report["ks"] = ks.ks;
        report["threshold"] = ks.threshold;
        report["c_alpha"] = law.c_alpha();
        pass = ks.pass;
    } else if (experiment == "second-largest") {
        const CanonicalDistribution dist(table_with_cache(params, L, N, cache_dir));
        const auto batch = collect_exact_batch(dist, n, opts.seed);
        const double b = params.b;
        const auto ks = ks_check(
            batch.second_largest, [b](double x) { return frechet_cdf(b, x); },
            tols.ks_for(tol::kKsSecondLargest), "exp(-x^(1-b))");
        report["ks"] = ks.ks;
        report["threshold"] = ks.threshold;
        pass = ks.pass;
    } else if (experiment == "bulk-marginal") {
        const CanonicalDistribution dist(table_with_cache(params, L, N, cache_dir));
        const auto batch = collect_exact_batch(dist, n, opts.seed);
        const double threshold =
            tols.ks_for(params.b == 3.0 ? tol::kKsGaussianB3 : tol::kKsGaussian);
        std::unique_ptr<StableLaw> law;
        if (params.b < 3.0) law = std::make_unique<StableLaw>(params.b - 1.0);
        auto ref_at = [&](double t_time) {
            return std::function<double(double)>([&law, t_time](double x) {
                return law ? law->bulk_marginal_cdf(x, t_time) : normal_cdf(x / std::sqrt(t_time));
            });
        };
        const auto ks_one = ks_check(batch.y_one, ref_at(1.0), threshold, "marginal at t=1");
        const auto ks_half = ks_check(batch.y_half, ref_at(0.5), threshold, "marginal at t=1/2");
        std::vector<double> incr(batch.y_one.size());
        for (std::size_t i = 0; i < incr.size(); ++i) incr[i] = batch.y_one[i] - batch.y_half[i];
        const double corr = sample_correlation(batch.y_half, incr);
        report["ks_t1"] = ks_one.ks;
        report["ks_t_half"] = ks_half.ks;
        report["threshold"] = threshold;
        const double corr_band = tols.corr_for(tol::kIncrementCorrBand);
        report["increment_correlation"] = corr;
        report["correlation_band"] = corr_band;
        pass = ks_one.pass && ks_half.pass && std::fabs(corr) < corr_band;
    } else if (experiment == "theorem1") {
        if (l_grid.empty()) l_grid = {100, 400, 1600};
        const auto trend = equivalence_trend(params, l_grid, rho, n, opts.seed);
        json runs = json::array();
        for (const auto& r : trend.reports) {
            runs.push_back({{"L", r.L},
                            {"N", r.N},
                            {"tv_single", r.tv_single},
                            {"tv_single_err", r.tv_single_err},
                            {"tv_single_bias", r.tv_single_bias},
                            {"tv_pair", r.tv_pair},
                            {"bulk_mean", r.bulk_mean},
                            {"bulk_var", r.bulk_var},
                            {"subcritical_warning", r.subcritical_warning}});
        }
        report["runs"] = runs;
        const double tv_band = tols.tv_for(tol::kEquivalenceFinalTv);
        report["tv_decreasing"] = trend.tv_decreasing;
        report["final_tv"] = trend.final_tv;
        report["final_threshold"] = tv_band;
        pass = trend.tv_decreasing && trend.final_tv < tv_band;
    } else if (experiment == "llt-ratio") {
        if (l_grid.empty()) l_grid = {50, 100, 200, 400};
        const auto trend = llt_trend(params, l_grid, rho, tols.ks_for(tol::kLltBandAtEnd));
        report["trend"] = trend_to_json(trend);
        pass = trend.strictly_decreasing && trend.final_within_band;
    } else {  // threshold-scan
        const auto scan = threshold_scan(params, L, gamma, {0.25, 0.5, 0.75, 1.0, 1.5, 2.0});
        report["threshold_N"] = scan.threshold;
        report["gamma"] = scan.gamma;
        report["N"] = scan.Ns;
        report["ratios"] = scan.ratios;
        report["gauss_term"] = scan.gauss_term;
        report["heavy_term"] = scan.heavy_term;
        bool monotone = true;
        for (std::size_t i = 1; i < scan.ratios.size(); ++i)
            if (std::fabs(scan.ratios[i] - 1.0) > std::fabs(scan.ratios[i - 1] - 1.0) + 1e-12)
                monotone = false;
        report["monotone_toward_1"] = monotone;
        pass = monotone;
    }

    report["rho_c"] = cc.rho_c;
    report["pass"] = pass;
    emit_report(report, opts.json_out);
    return pass ? kOk : kAssertFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-range process condensation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config");

    CommonOpts opts;

    auto* verify =
        app.add_subcommand("verify-identities", "closed-form identities, tails, and stationarity");
    double perturb = 0.0;
    add_common(verify, opts);
    verify->add_option("--perturb", perturb, "inject a relative fault (negative control)");

    auto* sample = app.add_subcommand("sample", "draw configuration batches");
    std::string sampler = "exact", out = "samples.csv", format = "csv", cache_dir;
    std::int64_t L = 3, N = -1, n = 10, rejection_cap = 1 << 22;
    double rho = -1.0;
    add_common(sample, opts);
    sample->add_option("--sampler", sampler, "exact | condensate | rejection | iid")
        ->check(CLI::IsMember({"exact", "condensate", "rejection", "iid"}));
    sample->add_option("-L,--sites", L, "number of sites");
    sample->add_option("-N,--n-particles", N, "total particles (or use --rho)");
    sample->add_option("--rho", rho, "density; N = round(rho L)");
    sample->add_option("-n,--n-samples", n, "number of configurations");
    sample->add_option("--out", out, "output file");
    sample->add_option("--format", format, "csv | binary")->check(CLI::IsMember({"csv", "binary"}));
    sample->add_option("--cache-dir", cache_dir, "canonical table cache directory");
    sample->add_option("--rejection-cap", rejection_cap, "rejection sampler attempt cap");

    auto* simulate_cmd = app.add_subcommand("simulate", "event-driven dynamics");
    std::string kernel_name = "uniform", events_out, snapshots_out;
    bool check_marginal = false;
    double t_end = 100.0;
    std::int64_t sim_L = 3, sim_N = 5;
    int n_snapshots = 4;
    add_common(simulate_cmd, opts);
    simulate_cmd->add_option("-L,--sites", sim_L, "number of sites");
    simulate_cmd->add_option("-N,--n-particles", sim_N, "total particles");
    simulate_cmd->add_option("--kernel", kernel_name, "uniform | ring")
        ->check(CLI::IsMember({"uniform", "ring"}));
    simulate_cmd->add_option("--t-end", t_end, "simulation horizon");
    simulate_cmd->add_option("--events-out", events_out, "CSV event log path");
    simulate_cmd->add_option("--snapshots-out", snapshots_out, "CSV snapshot grid path");
    simulate_cmd->add_option("--snapshots", n_snapshots, "number of snapshot times");
    simulate_cmd->add_flag("--check-marginal", check_marginal,
                           "compare occupancy time average to the exact marginal");

    auto* limit = app.add_subcommand("limit-test", "limit-law experiments");
    std::string experiment = "max-clt", l_grid_arg;
    std::int64_t lim_L = 1000, lim_n = 10000;
    double lim_rho = 2.0, gamma = 10.0;
    add_common(limit, opts);
    limit->add_option("--experiment", experiment,
                      "max-clt | max-stable | second-largest | bulk-marginal | theorem1 | "
                      "llt-ratio | threshold-scan")
        ->check(CLI::IsMember({"max-clt", "max-stable", "second-largest", "bulk-marginal",
                               "theorem1", "llt-ratio", "threshold-scan"}));
    limit->add_option("-L,--sites", lim_L, "system size");
    limit->add_option("--rho", lim_rho, "density");
    limit->add_option("-n,--n-samples", lim_n, "samples per experiment");
    limit->add_option("--cache-dir", cache_dir, "canonical table cache directory");
    limit->add_option("--gamma", gamma, "gamma(L) for threshold-scan");
    limit->add_option("--l-grid", l_grid_arg, "comma-separated L grid for trend experiments");
    LimitTols tols;
    limit->add_option("--ks-threshold", tols.ks, "override the KS / trend band");
    limit->add_option("--tv-threshold", tols.tv, "override the final TV band");
    limit->add_option("--corr-band", tols.corr, "override the increment-correlation band");

    auto* llt = app.add_subcommand("llt-ratio", "local limit ratio trend");
    std::string llt_grid = "50,100,200,400";
    double llt_rho = 1.0;
    add_common(llt, opts);
    llt->add_option("--rho", llt_rho, "density (N = round(rho L))");
    llt->add_option("--l-grid", llt_grid, "comma-separated L grid");

    auto* scan = app.add_subcommand("threshold-scan", "llt ratio around the refined threshold");
    std::int64_t scan_L = 2000;
    double scan_gamma = 10.0;
    add_common(scan, opts);
    scan->add_option("-L,--sites", scan_L, "system size");
    scan->add_option("--gamma", scan_gamma, "gamma(L)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) return cmd_verify_identities(opts, perturb);
        if (sample->parsed())
            return cmd_sample(opts, sampler, L, N, rho, n, out, format, cache_dir, rejection_cap);
        if (simulate_cmd->parsed())
            return cmd_simulate(opts, sim_L, sim_N, kernel_name, t_end, events_out, snapshots_out,
                                n_snapshots, check_marginal);
        if (limit->parsed())
            return cmd_limit_test(opts, experiment, lim_L, lim_rho, lim_n, cache_dir, gamma,
                                  l_grid_arg, tols);
        if (llt->parsed())
            return cmd_limit_test(opts, "llt-ratio", 0, llt_rho, 0, cache_dir, 0.0, llt_grid,
                                  LimitTols{});
        if (scan->parsed())
            return cmd_limit_test(opts, "threshold-scan", scan_L, 0.0, 0, cache_dir, scan_gamma,
                                  "", LimitTols{});
    } catch (const ResourceError& e) {
        std::fprintf(stderr, "resource error: %s\n", e.what());
        return kResource;
    } catch (const RegimeError& e) {
        std::fprintf(stderr, "regime error: %s\n", e.what());
        return kRegime;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "domain error: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
