#include "zrp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "zrp/hash.hpp"
#include "zrp/limits.hpp"

namespace zrp {

std::int64_t sample_critical_marginal(const WeightTable& wt, RngStream& rng) {
    const double u = rng.next_double();
    const auto it = std::upper_bound(wt.cdf.begin(), wt.cdf.end(), u);
    if (it != wt.cdf.end()) return it - wt.cdf.begin();
    if (wt.params.family == RateFamily::Stretched) {
        // residual mass beyond the table is certified below 1e-14
        return wt.kmax;
    }
    // u >= cdf(kmax): invert the exact tail.  Want the smallest m with
    // F(m) > u, i.e. tail(m+1) < 1-u.
    const double log_residual = std::log1p(-u);
    std::int64_t lo = wt.kmax;  // tail(lo+1) >= 1-u by the search above
    std::int64_t hi = 2 * (lo + 1);
    while (wt.log_tail(hi + 1) >= log_residual) {
        lo = hi;
        hi *= 2;
        if (hi > (std::int64_t{1} << 56)) throw NumericalError("marginal tail inversion diverged");
    }
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (wt.log_tail(mid + 1) < log_residual)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

Configuration sample_canonical_exact(const CanonicalDistribution& dist, RngStream& rng) {
    const CanonicalTable& t = dist.table();
    if (!t.full && t.L > 1)
        throw std::domain_error("sample_canonical_exact: full table with all rows required");
    Configuration eta(static_cast<std::size_t>(t.L));
    std::int64_t n = t.N;
    const double* lw = t.weights->logw.data();
    for (std::int64_t x = 0; x < t.L; ++x) {
        const std::int64_t r = t.L - x;
        if (r == 1) {
            eta[static_cast<std::size_t>(x)] = static_cast<std::int32_t>(n);
            n = 0;
            break;
        }
        const double log_norm = t.logq_at(r, n);
        const std::span<const double> prev = t.row(r - 1);
        const double u = rng.next_double();
        double cum = 0.0;
        std::int64_t chosen = -1;
        for (std::int64_t k = 0; k <= n; ++k) {
            cum += std::exp(lw[k] + prev[static_cast<std::size_t>(n - k)] - log_norm);
            if (cum > u) {
                chosen = k;
                break;
            }
        }
        if (chosen < 0) {
            // scanned the whole support: the conditional pmf must have summed
            // to 1 up to numerical residue
            if (std::fabs(cum - 1.0) > 1e-8)
                throw NumericalError("sample_canonical_exact: conditional pmf normalization");
            chosen = n;
        }
        eta[static_cast<std::size_t>(x)] = static_cast<std::int32_t>(chosen);
        n -= chosen;
    }
    return eta;
}

Configuration sample_canonical_condensate(const WeightTable& wt, std::int64_t L, std::int64_t N,
                                          RngStream& rng, CondensateStats* stats) {
    if (L < 2) throw std::domain_error("sample_canonical_condensate: L >= 2 required");
    const auto cc = critical_constants(wt.params);
    if (!(static_cast<double>(N) > cc.rho_c * static_cast<double>(L)))
        throw RegimeError("sample_canonical_condensate: supercritical N > rho_c L required");
    CondensateStats local;
    CondensateStats& st = stats ? *stats : local;
    const double scale = wt.params.family == RateFamily::PowerLaw
                             ? normalization_aL(wt.params, L)
                             : std::sqrt(cc.sigma2 * static_cast<double>(L));
    if (static_cast<double>(N) <= cc.rho_c * static_cast<double>(L) + scale)
        st.regime_warning = true;

    std::vector<std::int32_t> bulk(static_cast<std::size_t>(L) - 1);
    while (true) {
        ++st.attempts;
        std::int64_t sum = 0;
        bool ok = true;
        for (auto& v : bulk) {
            const std::int64_t k = sample_critical_marginal(wt, rng);
            sum += k;
            if (sum > N) {  // already impossible; reject without finishing
                ok = false;
                break;
            }
            v = static_cast<std::int32_t>(k);
        }
        if (ok) {
            ++st.draws;
            const auto site = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(L)));
            st.last_assigned_site = site;
            Configuration eta(static_cast<std::size_t>(L));
            std::int64_t j = 0;
            for (std::int64_t x = 0; x < L; ++x) {
                if (x == site)
                    eta[static_cast<std::size_t>(x)] = static_cast<std::int32_t>(N - sum);
                else
                    eta[static_cast<std::size_t>(x)] = bulk[static_cast<std::size_t>(j++)];
            }
            return eta;
        }
        if (st.attempts >= 64 && st.rejection_rate() > 0.5)
            throw RegimeError("sample_canonical_condensate: rejection rate above 50%");
    }
}

RejectionDraw sample_canonical_rejection(const WeightTable& wt, std::int64_t L, std::int64_t N,
                                         RngStream& rng, std::int64_t cap) {
    RejectionDraw out;
    Configuration eta(static_cast<std::size_t>(L));
    for (std::int64_t attempt = 1; attempt <= cap; ++attempt) {
        std::int64_t sum = 0;
        bool ok = true;
        for (std::int64_t x = 0; x < L; ++x) {
            const std::int64_t k = sample_critical_marginal(wt, rng);
            sum += k;
            if (sum > N) {
                ok = false;
                break;
            }
            eta[static_cast<std::size_t>(x)] = static_cast<std::int32_t>(k);
        }
        if (ok && sum == N) {
            out.config = eta;
            out.attempts = attempt;
            return out;
        }
    }
    throw RegimeError("sample_canonical_rejection: gave up after cap attempts");
}

// ---------------------------------------------------------------------------
// SampleBatch io
// ---------------------------------------------------------------------------

namespace {

const char* family_name(RateFamily f) {
    return f == RateFamily::PowerLaw ? "power_law" : "stretched";
}

void hash_meta(Sha1& h, const SampleBatch& b) {
    const std::uint8_t fam = b.params.family == RateFamily::PowerLaw ? 0 : 1;
    h.update_pod(fam);
    h.update_pod(b.params.b);
    h.update_pod(b.params.beta);
    h.update_pod(b.params.lambda);
    h.update_pod(b.L);
    h.update_pod(b.N);
    h.update_pod(b.seed);
    h.update_pod(b.stream_id);
    h.update(b.sampler_id.data(), b.sampler_id.size());
}

}  // namespace

std::string SampleBatch::content_hash() const {
    Sha1 h;
    hash_meta(h, *this);
    for (const auto& c : configs)
        h.update(c.data(), c.size() * sizeof(std::int32_t));
    return h.hex_digest();
}

void SampleBatch::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("SampleBatch::write_csv: cannot open " + path);
    os << "# zrp-sample-batch v1\n";
    os << "# family=" << family_name(params.family);
    if (params.family == RateFamily::PowerLaw)
        os << " b=" << params.b;
    else
        os << " beta=" << params.beta << " lambda=" << params.lambda;
    os << "\n# L=" << L << " N=" << N << " seed=" << seed << " stream=" << stream_id
       << " sampler=" << sampler_id << "\n";
    os << "# content_hash=" << content_hash() << "\n";
    for (const auto& c : configs) {
        for (std::size_t x = 0; x < c.size(); ++x) os << (x ? "," : "") << c[x];
        os << "\n";
    }
    if (!os) throw std::runtime_error("SampleBatch::write_csv: write failed");
}

namespace {
constexpr char kBatchMagic[8] = {'Z', 'R', 'P', 'B', 'A', 'T', 'C', '1'};
}

void SampleBatch::write_binary(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("SampleBatch::write_binary: cannot open " + path);
    os.write(kBatchMagic, sizeof kBatchMagic);
    const std::uint8_t fam = params.family == RateFamily::PowerLaw ? 0 : 1;
    os.write(reinterpret_cast<const char*>(&fam), 1);
    os.write(reinterpret_cast<const char*>(&params.b), sizeof(double));
    os.write(reinterpret_cast<const char*>(&params.beta), sizeof(double));
    os.write(reinterpret_cast<const char*>(&params.lambda), sizeof(double));
    os.write(reinterpret_cast<const char*>(&L), sizeof L);
    os.write(reinterpret_cast<const char*>(&N), sizeof N);
    os.write(reinterpret_cast<const char*>(&seed), sizeof seed);
    os.write(reinterpret_cast<const char*>(&stream_id), sizeof stream_id);
    const std::uint32_t id_len = static_cast<std::uint32_t>(sampler_id.size());
    os.write(reinterpret_cast<const char*>(&id_len), sizeof id_len);
    os.write(sampler_id.data(), id_len);
    const std::uint64_t n_configs = configs.size();
    os.write(reinterpret_cast<const char*>(&n_configs), sizeof n_configs);
    for (const auto& c : configs)
        os.write(reinterpret_cast<const char*>(c.data()),
                 static_cast<std::streamsize>(c.size() * sizeof(std::int32_t)));
    const std::string hash = content_hash();
    os.write(hash.data(), 40);
    if (!os) throw std::runtime_error("SampleBatch::write_binary: write failed");
}

SampleBatch SampleBatch::read_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("SampleBatch::read_binary: cannot open " + path);
    char magic[sizeof kBatchMagic];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kBatchMagic, sizeof magic) != 0)
        throw std::runtime_error("SampleBatch::read_binary: bad magic in " + path);
    SampleBatch b;
    std::uint8_t fam = 0;
    is.read(reinterpret_cast<char*>(&fam), 1);
    b.params.family = fam == 0 ? RateFamily::PowerLaw : RateFamily::Stretched;
    is.read(reinterpret_cast<char*>(&b.params.b), sizeof(double));
    is.read(reinterpret_cast<char*>(&b.params.beta), sizeof(double));
    is.read(reinterpret_cast<char*>(&b.params.lambda), sizeof(double));
    is.read(reinterpret_cast<char*>(&b.L), sizeof b.L);
    is.read(reinterpret_cast<char*>(&b.N), sizeof b.N);
    is.read(reinterpret_cast<char*>(&b.seed), sizeof b.seed);
    is.read(reinterpret_cast<char*>(&b.stream_id), sizeof b.stream_id);
    std::uint32_t id_len = 0;
    is.read(reinterpret_cast<char*>(&id_len), sizeof id_len);
    b.sampler_id.resize(id_len);
    is.read(b.sampler_id.data(), id_len);
    std::uint64_t n_configs = 0;
    is.read(reinterpret_cast<char*>(&n_configs), sizeof n_configs);
    b.configs.assign(n_configs, Configuration(static_cast<std::size_t>(b.L)));
    for (auto& c : b.configs)
        is.read(reinterpret_cast<char*>(c.data()),
                static_cast<std::streamsize>(c.size() * sizeof(std::int32_t)));
    std::string stored(40, '\0');
    is.read(stored.data(), 40);
    if (!is) throw std::runtime_error("SampleBatch::read_binary: truncated file " + path);
    if (stored != b.content_hash())
        throw std::runtime_error("SampleBatch::read_binary: content hash mismatch in " + path);
    return b;
}

}  // namespace zrp
