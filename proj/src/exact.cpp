#include "zrp/exact.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include "zrp/special.hpp"

namespace zrp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Dynamic range (in log units) a single linear band may span.  Together with
// the weight table's own range this stays clear of double underflow.
constexpr double kBandRange = 600.0;

struct Band {
    std::int64_t lo, hi;  // inclusive source index range
    double scale;         // max log value inside the band
};

std::vector<Band> segment_bands(std::span<const double> src) {
    std::vector<Band> bands;
    std::int64_t lo = 0;
    double mn = src[0], mx = src[0];
    for (std::int64_t n = 1; n < static_cast<std::int64_t>(src.size()); ++n) {
        const double v = src[static_cast<std::size_t>(n)];
        const double nmn = std::min(mn, v), nmx = std::max(mx, v);
        if (nmx - nmn > kBandRange) {
            bands.push_back({lo, n - 1, mx});
            lo = n;
            mn = mx = v;
        } else {
            mn = nmn;
            mx = nmx;
        }
    }
    bands.push_back({lo, static_cast<std::int64_t>(src.size()) - 1, mx});
    return bands;
}

// dst = log(w * exp(src)) truncated to indices 0..N.  The inner accumulation
// runs in scaled linear space per band; the per-entry order of operations is
// fixed, so the result does not depend on the number of worker threads.
class RowConvolver {
public:
    RowConvolver(const std::vector<double>& wlin, int threads)
        : wlin_(wlin), threads_(std::max(1, threads)) {
        const std::size_t n = wlin.size();
        ps_.resize(n);
        rb_.resize(n);
        acc_.resize(n);
        scale_.resize(n);
        // output split with equalized term counts (work for entry n is ~n)
        cuts_.push_back(0);
        const double nn = static_cast<double>(n);
        for (int t = 1; t < threads_; ++t)
            cuts_.push_back(static_cast<std::int64_t>(nn * std::sqrt(static_cast<double>(t) /
                                                                     threads_)));
        cuts_.push_back(static_cast<std::int64_t>(n));
        for (std::size_t i = 1; i < cuts_.size(); ++i) cuts_[i] = std::max(cuts_[i], cuts_[i - 1]);
    }

    void run(std::span<const double> src, std::span<double> dst) {
        const std::int64_t size = static_cast<std::int64_t>(src.size());
        std::fill(acc_.begin(), acc_.end(), 0.0);
        const auto bands = segment_bands(src);
        for (const Band& band : bands) {
            for (std::int64_t m = band.lo; m <= band.hi; ++m)
                ps_[static_cast<std::size_t>(m)] =
                    std::exp(src[static_cast<std::size_t>(m)] - band.scale);
            std::fill(rb_.begin() + band.lo, rb_.end(), 0.0);
            if (threads_ > 1 && size - band.lo > 4096) {
                std::vector<std::thread> pool;
                for (std::size_t t = 0; t + 1 < cuts_.size(); ++t)
                    pool.emplace_back([this, &band, size, t] {
                        accumulate(band, std::max(cuts_[t], band.lo),
                                   std::min(cuts_[t + 1], size));
                    });
                for (auto& th : pool) th.join();
            } else {
                accumulate(band, band.lo, size);
            }
            merge(band, size);
        }
        for (std::int64_t n = 0; n < size; ++n) {
            const std::size_t i = static_cast<std::size_t>(n);
            dst[i] = std::log(acc_[i]) + scale_[i];
        }
    }

private:
    void accumulate(const Band& band, std::int64_t out_lo, std::int64_t out_hi) {
        if (out_lo >= out_hi) return;
        const double* __restrict wraw = wlin_.data();
        double* __restrict r = rb_.data();
        for (std::int64_t m = band.lo; m <= std::min(band.hi, out_hi - 1); ++m) {
            const double pm = ps_[static_cast<std::size_t>(m)];
            const std::int64_t first = std::max(out_lo, m);
            for (std::int64_t nn = first; nn < out_hi; ++nn)
                r[nn] += pm * wraw[nn - m];
        }
    }

    void merge(const Band& band, std::int64_t size) {
        for (std::int64_t n = band.lo; n < size; ++n) {
            const std::size_t i = static_cast<std::size_t>(n);
            const double v = rb_[i];
            if (v <= 0.0) continue;
            if (acc_[i] == 0.0) {
                acc_[i] = v;
                scale_[i] = band.scale;
            } else {
                const double d = band.scale - scale_[i];
                if (d >= 0.0) {
                    acc_[i] = v + (d > 745.0 ? 0.0 : acc_[i] * std::exp(-d));
                    scale_[i] = band.scale;
                } else if (d > -745.0) {
                    acc_[i] += v * std::exp(d);
                }
            }
        }
    }

    const std::vector<double>& wlin_;
    int threads_;
    std::vector<std::int64_t> cuts_;
    std::vector<double> ps_, rb_, acc_, scale_;
};

// Fallback for weight tables whose own log range exceeds what the banded
// kernel can keep in normalized doubles; plain log-sum-exp, O(N^2) exp calls.
void convolve_row_lse(std::span<const double> logw, std::span<const double> src,
                      std::span<double> dst) {
    const std::int64_t size = static_cast<std::int64_t>(src.size());
    for (std::int64_t n = 0; n < size; ++n) {
        double mx = kNegInf;
        for (std::int64_t k = 0; k <= n; ++k)
            mx = std::max(mx, logw[static_cast<std::size_t>(k)] +
                                  src[static_cast<std::size_t>(n - k)]);
        double s = 0.0;
        for (std::int64_t k = 0; k <= n; ++k)
            s += std::exp(logw[static_cast<std::size_t>(k)] +
                          src[static_cast<std::size_t>(n - k)] - mx);
        dst[static_cast<std::size_t>(n)] = mx + std::log(s);
    }
}

}  // namespace

double CanonicalTable::logq_at(std::int64_t l, std::int64_t n) const {
    if (n < 0 || n > N) throw std::domain_error("CanonicalTable: n out of range");
    if (l == 0) return n == 0 ? 0.0 : kNegInf;  // empty site set
    return row(l)[static_cast<std::size_t>(n)];
}

std::span<const double> CanonicalTable::row(std::int64_t l) const {
    const std::size_t width = static_cast<std::size_t>(N) + 1;
    if (full) {
        if (l < 1 || l > L) throw std::domain_error("CanonicalTable: row out of range");
        return {logq.data() + static_cast<std::size_t>(l - 1) * width, width};
    }
    if (l == L) return {logq.data() + width, width};
    if (l == L - 1 && L >= 2) return {logq.data(), width};
    throw std::domain_error("CanonicalTable: rolling table keeps only rows L-1 and L");
}

CanonicalTable build_canonical_table(const ModelParams& params, std::int64_t L, std::int64_t N,
                                     BuildOptions opts) {
    params.validate();
    if (L < 1 || N < 0) throw std::domain_error("build_canonical_table: L >= 1, N >= 0");
    const std::size_t width = static_cast<std::size_t>(N) + 1;
    const std::int64_t rows = opts.full ? L : 2;  // rolling always holds two slots
    const std::int64_t bytes = rows * static_cast<std::int64_t>(width) * 8;
    if (bytes > opts.memory_budget_bytes)
        throw ResourceError("build_canonical_table: table exceeds memory budget");

    CanonicalTable t;
    t.params = params;
    t.L = L;
    t.N = N;
    t.full = opts.full;
    t.weights = std::make_shared<const WeightTable>(
        build_weight_table(params, std::max<std::int64_t>(N, 1)));
    t.logq.resize(static_cast<std::size_t>(rows) * width);

    std::span<const double> logw{t.weights->logw.data(), width};
    const bool banded = logw.front() - logw.back() < 640.0;

    int threads = opts.threads;
    if (threads <= 0)
        threads = static_cast<int>(std::min(4u, std::max(1u, std::thread::hardware_concurrency())));

    std::vector<double> wlin(width);
    for (std::size_t k = 0; k < width; ++k) wlin[k] = std::exp(logw[k]);
    RowConvolver conv(wlin, threads);

    if (opts.full) {
        std::copy(logw.begin(), logw.end(), t.logq.begin());
        for (std::int64_t l = 2; l <= L; ++l) {
            std::span<const double> src{t.logq.data() + static_cast<std::size_t>(l - 2) * width,
                                        width};
            std::span<double> dst{t.logq.data() + static_cast<std::size_t>(l - 1) * width, width};
            if (banded)
                conv.run(src, dst);
            else
                convolve_row_lse(logw, src, dst);
        }
        return t;
    }

    if (L == 1) {
        std::copy(logw.begin(), logw.end(), t.logq.begin());  // slot unused at L = 1
        std::copy(logw.begin(), logw.end(), t.logq.begin() + static_cast<std::ptrdiff_t>(width));
        return t;
    }
    std::vector<double> prev(width), cur(width);
    std::copy(logw.begin(), logw.end(), prev.begin());
    for (std::int64_t l = 2; l <= L; ++l) {
        if (banded)
            conv.run(prev, cur);
        else
            convolve_row_lse(logw, prev, cur);
        if (l < L) std::swap(prev, cur);
    }
    std::copy(prev.begin(), prev.end(), t.logq.begin());
    std::copy(cur.begin(), cur.end(), t.logq.begin() + static_cast<std::ptrdiff_t>(width));
    return t;
}

// ---------------------------------------------------------------------------
// CanonicalDistribution
// ---------------------------------------------------------------------------

CanonicalDistribution::CanonicalDistribution(std::shared_ptr<const CanonicalTable> table)
    : table_(std::move(table)) {
    if (!table_) throw std::invalid_argument("CanonicalDistribution: null table");
}

double CanonicalDistribution::log_prob(const Configuration& eta) const {
    const auto& t = *table_;
    if (static_cast<std::int64_t>(eta.size()) != t.L)
        throw std::domain_error("canonical_prob: configuration length != L");
    std::int64_t sum = 0;
    double lp = 0.0;
    for (const auto v : eta) {
        if (v < 0) throw std::domain_error("canonical_prob: negative occupancy");
        sum += v;
        if (sum > t.N) throw std::domain_error("canonical_prob: S_L(eta) != N");
        lp += t.weights->logw[static_cast<std::size_t>(v)];
    }
    if (sum != t.N) throw std::domain_error("canonical_prob: S_L(eta) != N");
    return lp - t.logq_at(t.L, t.N);
}

double CanonicalDistribution::prob(const Configuration& eta) const {
    return std::exp(log_prob(eta));
}

double CanonicalDistribution::site_marginal(std::int64_t k) const {
    const auto& t = *table_;
    if (k < 0 || k > t.N) throw std::domain_error("site_marginal: k outside [0, N]");
    const double num = t.weights->logw[static_cast<std::size_t>(k)] + t.logq_at(t.L - 1, t.N - k);
    return std::exp(num - t.logq_at(t.L, t.N));
}

// ---------------------------------------------------------------------------
// Fiber enumeration
// ---------------------------------------------------------------------------

std::int64_t fiber_size(std::int64_t L, std::int64_t N, std::int64_t cap) {
    if (L < 1 || N < 0) throw std::domain_error("fiber_size: L >= 1, N >= 0");
    const double lb = log_binomial(static_cast<double>(N + L - 1), static_cast<double>(L - 1));
    if (lb > std::log(static_cast<double>(cap)) + 1e-9) return -1;
    // exact product evaluation, safe given the cap screen above
    std::int64_t num = 1;
    for (std::int64_t i = 1; i < L; ++i) {
        num = num * (N + i) / i;  // exact: C(N+i, i) is built up incrementally
    }
    return num;
}

namespace {
void enumerate_rec(std::int64_t sites_left, std::int64_t mass, Configuration& prefix,
                   std::vector<Configuration>& out) {
    if (sites_left == 1) {
        prefix.push_back(static_cast<std::int32_t>(mass));
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (std::int64_t k = 0; k <= mass; ++k) {
        prefix.push_back(static_cast<std::int32_t>(k));
        enumerate_rec(sites_left - 1, mass - k, prefix, out);
        prefix.pop_back();
    }
}
}  // namespace

std::vector<Configuration> enumerate_fiber(std::int64_t L, std::int64_t N, std::int64_t cap) {
    const std::int64_t size = fiber_size(L, N, cap);
    if (size < 0 || size > cap)
        throw ResourceError("enumerate_fiber: composition count exceeds cap");
    std::vector<Configuration> out;
    out.reserve(static_cast<std::size_t>(size));
    Configuration prefix;
    prefix.reserve(static_cast<std::size_t>(L));
    enumerate_rec(L, N, prefix, out);
    return out;
}

// ---------------------------------------------------------------------------
// Local limit ratio and moderate-deviation threshold
// ---------------------------------------------------------------------------

namespace {
std::int64_t floor_rho_c_L(const ModelParams& params, std::int64_t L) {
    const double rho_c = critical_constants(params).rho_c;
    // tiny nudge so exact multiples (e.g. rho_c = 1/3, L divisible by 3) are
    // not pushed below the integer by representation error
    return static_cast<std::int64_t>(std::floor(rho_c * static_cast<double>(L) + 1e-9));
}
}  // namespace

double llt_ratio(const CanonicalTable& table) {
    const std::int64_t m = table.N - floor_rho_c_L(table.params, table.L);
    if (m < 0) throw std::domain_error("llt_ratio: N below floor(rho_c L)");
    const double log_ratio = table.logq_at(table.L, table.N) -
                             std::log(static_cast<double>(table.L)) -
                             table.weights->logw[static_cast<std::size_t>(m)];
    return std::exp(log_ratio);
}

double llt_ratio(const ModelParams& params, std::int64_t L, std::int64_t N) {
    BuildOptions opts;
    opts.full = false;
    return llt_ratio(build_canonical_table(params, L, N, opts));
}

std::int64_t moderate_deviation_threshold(const ModelParams& params, std::int64_t L,
                                          double gammaL) {
    params.validate();
    if (L < 3) throw std::domain_error("moderate_deviation_threshold: L too small");
    const double Ld = static_cast<double>(L);
    const double rho_c = critical_constants(params).rho_c;
    double x;
    if (params.family == RateFamily::PowerLaw) {
        if (!(params.b > 3.0))
            throw std::domain_error(
                "moderate_deviation_threshold: power-law refinement stated for b > 3 only");
        const double b = params.b;
        const double logL = std::log(Ld);
        x = rho_c * Ld + (b - 1.0) / (b - 2.0) * std::sqrt(Ld * logL) *
                             (1.0 + b / (2.0 * (b - 3.0)) * std::log(logL) / logL +
                              gammaL / logL);
    } else {
        x = rho_c * Ld + gammaL * std::pow(Ld, 1.0 / (2.0 * params.lambda));
    }
    return static_cast<std::int64_t>(std::ceil(x));
}

ModerateDeviationDecomposition moderate_deviation_decomposition(const CanonicalTable& table) {
    const auto cc = critical_constants(table.params);
    ModerateDeviationDecomposition d{};
    d.q = std::exp(table.logq_at(table.L, table.N));
    const std::int64_t m = table.N - floor_rho_c_L(table.params, table.L);
    d.heavy = m >= 0 ? std::exp(std::log(static_cast<double>(table.L)) +
                                table.weights->logw[static_cast<std::size_t>(m)])
                     : 0.0;
    if (std::isfinite(cc.sigma2)) {
        const double s = std::sqrt(cc.sigma2 * static_cast<double>(table.L));
        d.gauss = normal_pdf((static_cast<double>(table.N) - cc.rho_c * table.L) / s) / s;
    } else {
        d.gauss = 0.0;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Serialization: cache hits must be bit-identical to recomputation
// ---------------------------------------------------------------------------

namespace {
constexpr char kQtMagic[8] = {'Z', 'R', 'P', 'Q', 'T', 'B', 'L', '1'};
}

void CanonicalTable::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("CanonicalTable::save: cannot open " + path);
    os.write(kQtMagic, sizeof kQtMagic);
    const std::uint8_t fam = params.family == RateFamily::PowerLaw ? 0 : 1;
    const std::uint8_t full_flag = full ? 1 : 0;
    os.write(reinterpret_cast<const char*>(&fam), 1);
    os.write(reinterpret_cast<const char*>(&full_flag), 1);
    os.write(reinterpret_cast<const char*>(&params.b), sizeof(double));
    os.write(reinterpret_cast<const char*>(&params.beta), sizeof(double));
    os.write(reinterpret_cast<const char*>(&params.lambda), sizeof(double));
    os.write(reinterpret_cast<const char*>(&L), sizeof L);
    os.write(reinterpret_cast<const char*>(&N), sizeof N);
    const std::uint64_t n = logq.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(logq.data()),
             static_cast<std::streamsize>(n * sizeof(double)));
    if (!os) throw std::runtime_error("CanonicalTable::save: write failed");
}

CanonicalTable CanonicalTable::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("CanonicalTable::load: cannot open " + path);
    char magic[sizeof kQtMagic];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kQtMagic, sizeof magic) != 0)
        throw std::runtime_error("CanonicalTable::load: bad magic/version in " + path);
    CanonicalTable t;
    std::uint8_t fam = 0, full_flag = 0;
    is.read(reinterpret_cast<char*>(&fam), 1);
    is.read(reinterpret_cast<char*>(&full_flag), 1);
    t.params.family = fam == 0 ? RateFamily::PowerLaw : RateFamily::Stretched;
    t.full = full_flag != 0;
    is.read(reinterpret_cast<char*>(&t.params.b), sizeof(double));
    is.read(reinterpret_cast<char*>(&t.params.beta), sizeof(double));
    is.read(reinterpret_cast<char*>(&t.params.lambda), sizeof(double));
    is.read(reinterpret_cast<char*>(&t.L), sizeof t.L);
    is.read(reinterpret_cast<char*>(&t.N), sizeof t.N);
    std::uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    t.logq.resize(n);
    is.read(reinterpret_cast<char*>(t.logq.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("CanonicalTable::load: truncated file " + path);
    t.weights = std::make_shared<const WeightTable>(
        build_weight_table(t.params, std::max<std::int64_t>(t.N, 1)));
    return t;
}

}  // namespace zrp
