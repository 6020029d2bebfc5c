#include "zrp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "zrp/special.hpp"

namespace zrp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Kahan-compensated accumulator for long positive sums.
struct CompensatedSum {
    double s = 0.0, c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    double value() const { return s; }
};

}  // namespace

ModelParams ModelParams::power_law(double b_exponent) {
    ModelParams p;
    p.family = RateFamily::PowerLaw;
    p.b = b_exponent;
    p.validate();
    return p;
}

ModelParams ModelParams::stretched(double beta_amplitude, double lambda_exponent) {
    ModelParams p;
    p.family = RateFamily::Stretched;
    p.beta = beta_amplitude;
    p.lambda = lambda_exponent;
    p.validate();
    return p;
}

void ModelParams::validate() const {
    if (family == RateFamily::PowerLaw) {
        if (!(b > 2.0)) throw std::domain_error("ModelParams: power-law family requires b > 2");
    } else {
        if (!(beta > 0.0)) throw std::domain_error("ModelParams: stretched family requires beta > 0");
        if (!(lambda > 0.5 && lambda < 1.0))
            throw std::domain_error("ModelParams: stretched family requires lambda in (1/2, 1)");
    }
}

std::string ModelParams::cache_key() const {
    char buf[96];
    if (family == RateFamily::PowerLaw)
        std::snprintf(buf, sizeof buf, "pl_b%.17g", b);
    else
        std::snprintf(buf, sizeof buf, "st_beta%.17g_lambda%.17g", beta, lambda);
    return buf;
}

bool ModelParams::operator==(const ModelParams& o) const {
    if (family != o.family) return false;
    return family == RateFamily::PowerLaw ? b == o.b : (beta == o.beta && lambda == o.lambda);
}

double jump_rate(const ModelParams& params, std::int64_t k) {
    if (k < 0) throw std::domain_error("jump_rate: negative occupancy");
    if (k == 0) return 0.0;
    const double kd = static_cast<double>(k);
    return params.family == RateFamily::PowerLaw ? 1.0 + params.b / kd
                                                 : 1.0 + params.beta / std::pow(kd, params.lambda);
}

// ---------------------------------------------------------------------------
// Closed forms and series for the critical constants
// ---------------------------------------------------------------------------

CriticalConstants critical_constants(const ModelParams& params) {
    params.validate();
    if (params.family == RateFamily::PowerLaw) {
        const double b = params.b;
        CriticalConstants c;
        c.Z_c = b / (b - 1.0);
        c.rho_c = 1.0 / (b - 2.0);
        c.sigma2 = b > 3.0 ? (b - 1.0) * (b - 1.0) / ((b - 2.0) * (b - 2.0) * (b - 3.0)) : kInf;
        return c;
    }
    return critical_constants_series(params);
}

namespace {

// log of the unnormalized critical weight 1/g(k)! for the power-law family:
// g(k)! = Gamma(k+b+1) / (Gamma(b+1) k!).
double log_unnorm_weight_pl(double b, std::int64_t k) {
    return log_gamma(b + 1.0) - log_gamma_ratio(static_cast<double>(k) + 1.0, b);
}

double log_weight_pl(double b, std::int64_t k) {
    return std::log(b - 1.0) + log_gamma(b) - log_gamma_ratio(static_cast<double>(k) + 1.0, b);
}

double log_tail_pl(double b, std::int64_t m) {
    return log_gamma(b) - log_gamma_ratio(static_cast<double>(m) + 1.0, b - 1.0);
}

// Upper bound on the unnormalized stretched tail sum_{k > K} u(k), given
// log u(K).  Derived from 1+x >= exp(x/(1+x)) and integral comparison:
//   u(k) <= u(K) exp(D) exp(-c1 (k+1)^(1-lambda)),
//   D = c1 (K+1)^(1-lambda) + beta^2 (K+1)^(1-2 lambda) / (2 lambda - 1),
// then the exponential-sum tail is bounded by an incomplete-gamma style
// integral estimate.  Returns +inf when K is too small for the estimate.
double stretched_tail_bound(double beta, double lambda, std::int64_t K, double logu_K) {
    const double c1 = beta / (1.0 - lambda);
    const double y = static_cast<double>(K) + 1.0;
    const double t0 = std::pow(y, 1.0 - lambda);
    const double p = lambda / (1.0 - lambda);
    const double denom = c1 - p / t0;
    if (denom <= 0.0) return kInf;
    const double log_extra = beta * beta * std::pow(y, 1.0 - 2.0 * lambda) / (2.0 * lambda - 1.0);
    const double log_bound = logu_K + log_extra + lambda * std::log(y) -
                             std::log((1.0 - lambda) * denom);
    return std::exp(log_bound);
}

struct StretchedSums {
    std::vector<double> logu;  // log u(k), k = 0..horizon
    double mass = 0.0;         // sum u(k) over the table
    double remainder = 0.0;    // certified bound on the truncated mass
    double m1 = 0.0;           // sum k u(k)
    double m2 = 0.0;           // sum k^2 u(k)
};

// Accumulates the unnormalized stretched weights until the certified tail
// bound falls below tol * mass (or at least out to k = at_least).
StretchedSums stretched_sums(const ModelParams& params, std::int64_t at_least, double tol) {
    constexpr std::int64_t kHardCap = std::int64_t{1} << 24;
    const double beta = params.beta, lambda = params.lambda;
    StretchedSums out;
    out.logu.reserve(static_cast<std::size_t>(std::max<std::int64_t>(at_least + 1, 4096)));
    CompensatedSum mass, m1, m2;
    double logu = 0.0;
    out.logu.push_back(0.0);
    mass.add(1.0);
    std::int64_t k = 0;
    while (true) {
        if (k >= at_least && (k & 63) == 0) {
            const double bound = stretched_tail_bound(beta, lambda, k, logu);
            if (bound < tol * mass.value()) {
                out.remainder = bound;
                break;
            }
        }
        if (k >= kHardCap)
            throw NumericalError("stretched weights: truncation bound not reached before cap");
        ++k;
        logu -= std::log1p(beta / std::pow(static_cast<double>(k), lambda));
        out.logu.push_back(logu);
        const double u = std::exp(logu);
        const double kd = static_cast<double>(k);
        mass.add(u);
        m1.add(kd * u);
        m2.add(kd * kd * u);
    }
    out.mass = mass.value();
    out.m1 = m1.value();
    out.m2 = m2.value();
    return out;
}

}  // namespace

double tail_sum_0(const ModelParams& params, std::int64_t M) {
    if (params.family != RateFamily::PowerLaw)
        throw std::domain_error("tail_sum_0: power-law family only");
    const double b = params.b;
    if (M <= 0) return 1.0 + tail_sum_0(params, 1);
    // telescoping of the tail recursion (m+b) tail(m+1) = (m+1) tail(m)
    return static_cast<double>(M) * std::exp(log_tail_pl(b, M - 1)) / (b - 2.0);
}

double tail_sum_1(const ModelParams& params, std::int64_t M) {
    if (params.family != RateFamily::PowerLaw)
        throw std::domain_error("tail_sum_1: power-law family only");
    const double b = params.b;
    if (!(b > 3.0)) return kInf;
    if (M <= 0) return tail_sum_1(params, 1);
    const double Md = static_cast<double>(M);
    const double tail_prev = std::exp(log_tail_pl(b, M - 1));
    return tail_prev * ((Md - 1.0) * (Md + 1.0) + (Md + b - 2.0) / (b - 2.0)) / (b - 3.0);
}

CriticalConstants critical_constants_series(const ModelParams& params) {
    params.validate();
    CriticalConstants c;
    if (params.family == RateFamily::PowerLaw) {
        const double b = params.b;
        // direct term summation, then exact telescoped tails beyond K
        const std::int64_t K = 65536;
        CompensatedSum mass, m1, m2;
        double logu_anchor = 0.0;
        double u = 1.0;
        for (std::int64_t k = 0; k <= K; ++k) {
            if (k > 0) {
                const double kd = static_cast<double>(k);
                u *= kd / (kd + b);
                if ((k & 4095) == 0) {  // re-anchor the recursion on the exact value
                    logu_anchor = log_unnorm_weight_pl(b, k);
                    u = std::exp(logu_anchor);
                }
            }
            const double kd = static_cast<double>(k);
            mass.add(u);
            m1.add(kd * u);
            m2.add(kd * kd * u);
        }
        // Tails of the normalized weights, rescaled to the unnormalized ones
        // by Z_c; expressed via tail sums so the route stays independent of
        // the hypergeometric identity.  sum_{k>K} W(k) = tail(K+1),
        // sum_{k>K} k W(k) = (K+1) tail(K+1) + T(K+2),
        // sum_{k>K} k^2 W(k) = K^2 tail(K+1) + 2 U(K+1) - T(K+1).
        const double tail_K1 = std::exp(log_tail_pl(b, K + 1));
        const double Kd = static_cast<double>(K);
        const double w_mass_tail = tail_K1;
        const double w_m1_tail = (Kd + 1.0) * tail_K1 + tail_sum_0(params, K + 2);
        const double w_m2_tail =
            b > 3.0 ? Kd * Kd * tail_K1 + 2.0 * tail_sum_1(params, K + 1) - tail_sum_0(params, K + 1)
                    : kInf;
        // unnormalized u(k) = Z_c W(k) with Z_c = 1 / W(0) mass-consistency:
        // recover Z from the normalization identity sum_k W(k) = 1.
        const double z_from_tail = mass.value() / (1.0 - w_mass_tail);
        c.Z_c = z_from_tail;
        const double m1_full = m1.value() / z_from_tail + w_m1_tail;
        c.rho_c = m1_full;
        if (b > 3.0) {
            const double m2_full = m2.value() / z_from_tail + w_m2_tail;
            c.sigma2 = m2_full - m1_full * m1_full;
        } else {
            c.sigma2 = kInf;
        }
        return c;
    }
    const StretchedSums s = stretched_sums(params, 1, 1e-16);
    const double z = s.mass + s.remainder;
    c.Z_c = z;
    c.rho_c = s.m1 / z;  // remainder contributes < 1e-10 relative
    const double ex2 = s.m2 / z;
    c.sigma2 = ex2 - c.rho_c * c.rho_c;
    return c;
}

// ---------------------------------------------------------------------------
// Weight tables
// ---------------------------------------------------------------------------

std::int64_t default_kmax(const ModelParams& params, double mass_tol, std::int64_t cap) {
    params.validate();
    if (params.family == RateFamily::PowerLaw) {
        const double b = params.b;
        // initial guess from tail(m) ~ Gamma(b) m^(1-b), then refine
        double guess = std::pow(std::exp(log_gamma(b)) / mass_tol, 1.0 / (b - 1.0));
        std::int64_t k = std::min<std::int64_t>(cap, static_cast<std::int64_t>(guess) + 2);
        while (k > 1 && std::exp(log_tail_pl(b, k)) < mass_tol) --k;
        while (k < cap && std::exp(log_tail_pl(b, k + 1)) >= mass_tol) ++k;
        return std::max<std::int64_t>(k, 1);
    }
    const StretchedSums s = stretched_sums(params, 1, mass_tol);
    return std::max<std::int64_t>(static_cast<std::int64_t>(s.logu.size()) - 1, 1);
}

WeightTable build_weight_table(const ModelParams& params, std::int64_t kmax) {
    params.validate();
    if (kmax < 1) throw std::domain_error("build_weight_table: kmax >= 1 required");
    WeightTable t;
    t.params = params;
    t.kmax = kmax;
    const std::size_t n = static_cast<std::size_t>(kmax) + 1;
    t.logw.resize(n);
    t.w.resize(n);
    t.cdf.resize(n);
    t.tail.resize(n + 1);

    if (params.family == RateFamily::PowerLaw) {
        const double b = params.b;
        // log weights by the defining recursion: keeps W(k) g(k) = W(k-1)
        // exact to rounding at every k (per-entry log-gamma differences would
        // drift to ~1e-11 relative by k ~ 10^3)
        t.logw[0] = std::log((b - 1.0) / b);
        for (std::int64_t k = 1; k <= kmax; ++k) {
            const double kd = static_cast<double>(k);
            t.logw[static_cast<std::size_t>(k)] =
                t.logw[static_cast<std::size_t>(k - 1)] + std::log(kd) - std::log(kd + b);
        }
        for (std::int64_t m = 0; m <= kmax + 1; ++m)
            t.tail[static_cast<std::size_t>(m)] = std::exp(log_tail_pl(b, m));
    } else {
        // normalize over an internally extended horizon so the truncated mass
        // is certified below 1e-14 of the total
        const StretchedSums s = stretched_sums(params, kmax, 1e-14);
        if (s.remainder > 1e-12 * s.mass)
            throw NumericalError("build_weight_table: stretched truncation exceeds 1e-12 mass");
        const double z = s.mass + s.remainder;
        const double logz = std::log(z);
        const std::int64_t horizon = static_cast<std::int64_t>(s.logu.size()) - 1;
        for (std::int64_t k = 0; k <= kmax; ++k)
            t.logw[static_cast<std::size_t>(k)] = s.logu[static_cast<std::size_t>(k)] - logz;
        // suffix sums of the unnormalized weights give the in-table tails
        std::vector<double> suffix(static_cast<std::size_t>(horizon) + 2, 0.0);
        for (std::int64_t k = horizon; k >= 0; --k)
            suffix[static_cast<std::size_t>(k)] =
                suffix[static_cast<std::size_t>(k) + 1] + std::exp(s.logu[static_cast<std::size_t>(k)]);
        for (std::int64_t m = 0; m <= kmax + 1; ++m)
            t.tail[static_cast<std::size_t>(m)] =
                (suffix[static_cast<std::size_t>(std::min(m, horizon + 1))] + s.remainder) / z;
        // amplitude of the stretched asymptote, estimated from the end of the
        // extended horizon; the compensated sequence is increasing, so the
        // last doubling gap is a conservative error bar
        const double c1 = params.beta / (1.0 - params.lambda);
        auto compensated = [&](std::int64_t k) {
            return std::exp(s.logu[static_cast<std::size_t>(k)] - logz +
                            c1 * std::pow(static_cast<double>(k), 1.0 - params.lambda));
        };
        t.amplitude = compensated(horizon);
        t.amplitude_err = t.amplitude - compensated(horizon / 2);
    }

    for (std::size_t k = 0; k < n; ++k) t.w[k] = std::exp(t.logw[k]);
    for (std::int64_t k = 0; k <= kmax; ++k)
        t.cdf[static_cast<std::size_t>(k)] = 1.0 - t.tail[static_cast<std::size_t>(k) + 1];
    return t;
}

double WeightTable::log_tail(std::int64_t m) const {
    if (m <= 0) return 0.0;
    if (params.family == RateFamily::PowerLaw) return log_tail_pl(params.b, m);
    if (m <= kmax + 1) return std::log(tail[static_cast<std::size_t>(m)]);
    throw std::out_of_range("WeightTable::log_tail: beyond stretched table");
}

double WeightTable::tail_asymptotic(double x) const {
    if (!(x > 0.0)) throw std::domain_error("tail_asymptotic: x > 0 required");
    if (params.family == RateFamily::PowerLaw)
        return std::exp(log_gamma(params.b) + (1.0 - params.b) * std::log(x));
    const double lam = params.lambda;
    return amplitude * std::pow(x, lam) / params.beta *
           std::exp(-params.beta * std::pow(x, 1.0 - lam) / (1.0 - lam));
}

double tail_asymptotic(const ModelParams& params, double x) {
    if (params.family != RateFamily::PowerLaw)
        throw std::domain_error("tail_asymptotic: stretched family needs a weight table");
    if (!(x > 0.0)) throw std::domain_error("tail_asymptotic: x > 0 required");
    return std::exp(log_gamma(params.b) + (1.0 - params.b) * std::log(x));
}

double log_weight_closed_form(const ModelParams& params, std::int64_t k) {
    if (params.family != RateFamily::PowerLaw)
        throw std::domain_error("log_weight_closed_form: power-law family only");
    return log_weight_pl(params.b, k);
}

// ---------------------------------------------------------------------------
// Partition function and density
// ---------------------------------------------------------------------------

double partition_function(const ModelParams& params, double phi) {
    params.validate();
    if (phi < 0.0 || phi > ModelParams::phi_c)
        throw std::domain_error("partition_function: phi outside [0, phi_c]");
    if (phi == 0.0) return 1.0;
    if (phi == ModelParams::phi_c) return critical_constants(params).Z_c;
    // term recursion t_k = t_{k-1} phi / g(k); ratios are below phi, so the
    // truncated tail is bounded geometrically
    CompensatedSum sum;
    double term = 1.0;
    sum.add(term);
    for (std::int64_t k = 1; k < (std::int64_t{1} << 26); ++k) {
        term *= phi / jump_rate(params, k);
        sum.add(term);
        if (term * phi / (1.0 - phi) < 1e-14 * sum.value()) return sum.value();
    }
    throw NumericalError("partition_function: series did not converge");
}

double density_of_fugacity(const ModelParams& params, double phi) {
    params.validate();
    if (phi < 0.0 || phi > ModelParams::phi_c)
        throw std::domain_error("density_of_fugacity: phi outside [0, phi_c]");
    if (phi == 0.0) return 0.0;
    if (phi == ModelParams::phi_c) return critical_constants(params).rho_c;
    CompensatedSum z, m1;
    double term = 1.0;
    z.add(term);
    for (std::int64_t k = 1; k < (std::int64_t{1} << 26); ++k) {
        const double kd = static_cast<double>(k);
        term *= phi / jump_rate(params, k);
        z.add(term);
        m1.add(kd * term);
        // tail of sum k t_k below a geometric envelope starting at (k+1) t_k
        if ((kd + 1.0) * term * phi / ((1.0 - phi) * (1.0 - phi)) < 1e-14 * m1.value() &&
            term * phi / (1.0 - phi) < 1e-14 * z.value())
            return m1.value() / z.value();
    }
    throw NumericalError("density_of_fugacity: series did not converge");
}

// ---------------------------------------------------------------------------
// Hypergeometric identity
// ---------------------------------------------------------------------------

double hypergeometric_sum(double u, double v, double w) {
    if (!(u > 0.0 && v > 0.0)) throw std::domain_error("hypergeometric_sum: u, v > 0 required");
    if (!(w > u + v)) throw std::domain_error("hypergeometric_sum: w > u + v required");
    return std::exp(log_gamma(u) + log_gamma(v) + log_gamma(w - u - v) - log_gamma(w - u) -
                    log_gamma(w - v));
}

double hypergeometric_series(double u, double v, double w, double tol, int max_terms) {
    if (!(u > 0.0 && v > 0.0)) throw std::domain_error("hypergeometric_series: u, v > 0 required");
    if (!(w > u + v)) throw std::domain_error("hypergeometric_series: w > u + v required");
    const double s = w - u - v;
    CompensatedSum sum;
    double term = std::exp(log_gamma(u) + log_gamma(v) - log_gamma(w));
    sum.add(term);
    for (int k = 0; k < max_terms; ++k) {
        const double kd = static_cast<double>(k);
        term *= (u + kd) * (v + kd) / ((w + kd) * (kd + 1.0));
        sum.add(term);
        // terms decay like k^(-1-s); the integral tail estimate term*(k+2)/s
        // carries a relative error of order (u+v+s)/k, so stop once that
        // second-order piece is itself below tolerance
        const double remainder = term * (kd + 2.0) / s;
        const double estimate_err = remainder * 8.0 * (2.0 + u + v + s) / (kd + 2.0);
        if (estimate_err < 0.5 * tol * sum.value()) return sum.value() + remainder;
    }
    throw NumericalError("hypergeometric_series: did not reach tolerance");
}

// ---------------------------------------------------------------------------
// Smoothness sandwich
// ---------------------------------------------------------------------------

std::pair<double, double> smoothness_bounds(const WeightTable& table, std::int64_t k1,
                                            std::int64_t k2) {
    if (k1 < 0 || k2 < k1 || k2 > table.kmax)
        throw std::domain_error("smoothness_bounds: need 0 <= k1 <= k2 <= kmax");
    const double w1 = table.w[static_cast<std::size_t>(k1)];
    if (k1 == k2) return {w1, w1};
    double lower;
    if (table.params.family == RateFamily::PowerLaw) {
        lower = k1 == 0 ? 0.0
                        : w1 * std::pow(static_cast<double>(k1) / static_cast<double>(k2),
                                        table.params.b);
    } else {
        const double lam = table.params.lambda;
        const double gap = std::pow(static_cast<double>(k2), 1.0 - lam) -
                           std::pow(static_cast<double>(k1), 1.0 - lam);
        lower = w1 * std::exp(-table.params.beta * gap / (1.0 - lam));
    }
    return {lower, w1};
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr char kWtMagic[8] = {'Z', 'R', 'P', 'W', 'T', 'B', 'L', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof v);
}

void write_vec(std::ostream& os, const std::vector<double>& v) {
    const std::uint64_t n = v.size();
    write_pod(os, n);
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_vec(std::istream& is, std::vector<double>& v) {
    std::uint64_t n = 0;
    read_pod(is, n);
    v.resize(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

void WeightTable::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("WeightTable::save: cannot open " + path);
    os.write(kWtMagic, sizeof kWtMagic);
    const std::uint8_t fam = params.family == RateFamily::PowerLaw ? 0 : 1;
    write_pod(os, fam);
    write_pod(os, params.b);
    write_pod(os, params.beta);
    write_pod(os, params.lambda);
    write_pod(os, kmax);
    write_pod(os, amplitude);
    write_pod(os, amplitude_err);
    write_vec(os, logw);
    write_vec(os, w);
    write_vec(os, cdf);
    write_vec(os, tail);
    if (!os) throw std::runtime_error("WeightTable::save: write failed");
}

WeightTable WeightTable::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("WeightTable::load: cannot open " + path);
    char magic[sizeof kWtMagic];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kWtMagic, sizeof magic) != 0)
        throw std::runtime_error("WeightTable::load: bad magic/version in " + path);
    WeightTable t;
    std::uint8_t fam = 0;
    read_pod(is, fam);
    t.params.family = fam == 0 ? RateFamily::PowerLaw : RateFamily::Stretched;
    read_pod(is, t.params.b);
    read_pod(is, t.params.beta);
    read_pod(is, t.params.lambda);
    read_pod(is, t.kmax);
    read_pod(is, t.amplitude);
    read_pod(is, t.amplitude_err);
    read_vec(is, t.logw);
    read_vec(is, t.w);
    read_vec(is, t.cdf);
    read_vec(is, t.tail);
    if (!is) throw std::runtime_error("WeightTable::load: truncated file " + path);
    return t;
}

}  // namespace zrp
