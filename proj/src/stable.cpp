#include "zrp/stable.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zrp/special.hpp"
#include "zrp/types.hpp"

namespace zrp {

namespace {

// 16-point Gauss-Legendre nodes/weights on [-1, 1]
constexpr double kGlX[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                            0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                            0.9445750230732326, 0.9894009349916499};
constexpr double kGlW[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                            0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                            0.0622535239386479, 0.0271524594117541};

template <typename F>
double gl16(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += kGlW[i] * (f(c - h * kGlX[i]) + f(c + h * kGlX[i]));
    return s * h;
}

template <typename F>
double gl16_panels(F&& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double s = 0.0;
    for (int i = 0; i < panels; ++i) s += gl16(f, a + i * h, a + (i + 1) * h);
    return s;
}

// int_A^inf cos(y) y^{-p} dy (kind 0) or sin(y) y^{-p} dy (kind 1) by the
// integration-by-parts asymptotic series; truncated at the smallest term.
// Term k has magnitude p(p+1)...(p+k-1) A^{-p-k}; signs repeat with period 4.
double oscillatory_tail(double p, double A, int kind) {
    static const int sign_cos[4] = {-1, +1, +1, -1};  // -sinA, +cosA, +sinA, -cosA, ...
    static const int sign_sin[4] = {+1, +1, -1, -1};  // +cosA, +sinA, -cosA, -sinA, ...
    const double sA = std::sin(A), cA = std::cos(A);
    double mag = std::pow(A, -p);
    double prod = 1.0;
    double result = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 16; ++k) {
        const double m = prod * mag;
        if (m > prev) break;  // asymptotic series turned; stop at smallest term
        const bool even = (k % 2) == 0;
        const double trig = kind == 0 ? (even ? sA : cA) : (even ? cA : sA);
        const int sign = kind == 0 ? sign_cos[k % 4] : sign_sin[k % 4];
        result += sign * trig * m;
        prev = m;
        prod *= p + k;
        mag /= A;
        if (m < 1e-18) break;
    }
    return result;
}

}  // namespace

StableLaw::StableLaw(double alpha) : alpha_(alpha) {
    if (!(alpha > 1.0 && alpha < 2.0))
        throw std::domain_error("StableLaw: alpha in (1, 2) required");
    tan_half_ = std::tan(M_PI * alpha / 2.0);

    // Scheme A: real part of the Levy integral at t = 1,
    //   C = alpha [ int_0^1 (1-cos y) y^{-a-1} dy + 1/alpha
    //               - int_1^inf cos(y) y^{-a-1} dy ].
    // The [0,1] piece is the alternating series over the cosine expansion.
    double series = 0.0;
    double fact = 1.0;  // (2j)!
    for (int j = 1; j <= 24; ++j) {
        fact *= (2.0 * j - 1.0) * (2.0 * j);
        const double term = ((j & 1) ? 1.0 : -1.0) / (fact * (2.0 * j - alpha));
        series += term;
        if (std::fabs(term) < 1e-18) break;
    }
    const double A = 64.0;
    const double p = alpha + 1.0;
    auto cos_integrand = [p](double y) { return std::cos(y) * std::pow(y, -p); };
    const double cos_int = gl16_panels(cos_integrand, 1.0, A, 2 * static_cast<int>(A)) +
                           oscillatory_tail(p, A, 0);
    const double c_scheme_a = alpha * (series + 1.0 / alpha - cos_int);

    // Scheme B: imaginary part at t = 1 over tan(pi alpha / 2),
    //   -C tan(pi a/2) = alpha [ int_0^1 (y - sin y) y^{-a-1} dy
    //                            + 1/(alpha-1) - int_1^inf sin(y) y^{-a-1} dy ].
    double series_im = 0.0;
    fact = 1.0;  // (2j+1)!
    for (int j = 1; j <= 24; ++j) {
        fact *= (2.0 * j) * (2.0 * j + 1.0);
        const double term = ((j & 1) ? 1.0 : -1.0) / (fact * (2.0 * j + 1.0 - alpha));
        series_im += term;
        if (std::fabs(term) < 1e-18) break;
    }
    auto sin_integrand = [p](double y) { return std::sin(y) * std::pow(y, -p); };
    const double sin_int = gl16_panels(sin_integrand, 1.0, A, 2 * static_cast<int>(A)) +
                           oscillatory_tail(p, A, 1);
    const double im_part = alpha * (series_im + 1.0 / (alpha - 1.0) - sin_int);
    const double c_scheme_b = -im_part / tan_half_;

    c_alpha_ = 0.5 * (c_scheme_a + c_scheme_b);
    c_spread_ = std::fabs(c_scheme_a - c_scheme_b) / c_alpha_;
    if (!(c_alpha_ > 0.0) || c_spread_ > 1e-8)
        throw NumericalError("StableLaw: quadrature schemes for C_alpha disagree");

    build_grid();
}

std::complex<double> StableLaw::char_fn(double t) const {
    if (t == 0.0) return {1.0, 0.0};
    const double mag = c_alpha_ * std::pow(std::fabs(t), alpha_);
    const double sgn = t > 0.0 ? 1.0 : -1.0;
    return std::polar(std::exp(-mag), -mag * sgn * tan_half_);
}

double StableLaw::density(double u) const {
    // (1/pi) int_0^T e^{-C t^a} cos(t u + C tan(pi a/2) t^a) dt
    const double T = std::pow(39.0 / c_alpha_, 1.0 / alpha_);
    const double max_rate =
        std::fabs(u) + c_alpha_ * alpha_ * std::fabs(tan_half_) * std::pow(T, alpha_ - 1.0);
    const int panels = static_cast<int>(std::ceil(T * (max_rate + 1.0) / 2.5)) + 8;
    auto f = [this, u](double t) {
        const double ta = c_alpha_ * std::pow(t, alpha_);
        return std::exp(-ta) * std::cos(t * u + ta * tan_half_);
    };
    return gl16_panels(f, 0.0, T, panels) / M_PI;
}

double StableLaw::gil_pelaez_cdf(double x) const {
    // F(x) = 1/2 + (1/pi) int_0^inf e^{-C t^a} sin(t x + C tan(pi a/2) t^a) / t dt
    // The integrand tends to x at t -> 0 but has a t^{alpha-1} kink, so the
    // first panels shrink geometrically toward zero; each panel is further
    // split so no subpanel spans more than ~2.5 radians of phase.
    const double T = std::pow(39.0 / c_alpha_, 1.0 / alpha_);
    auto f = [this, x](double t) {
        const double ta = c_alpha_ * std::pow(t, alpha_);
        return std::exp(-ta) * std::sin(t * x + ta * tan_half_) / t;
    };
    const double max_rate =
        std::fabs(x) + c_alpha_ * alpha_ * std::fabs(tan_half_) * std::pow(T, alpha_ - 1.0);
    auto panels_for = [max_rate](double a, double b) {
        return static_cast<int>(std::ceil((b - a) * (max_rate + 1.0) / 2.5)) + 1;
    };
    double integral = 0.0;
    double lo = std::min(1e-8 * T, 0.01 / (max_rate + 1.0));
    integral += x * lo;  // sin(tx+..)/t ~ x on [0, lo]; O(lo^alpha) error
    while (lo < 0.125 * T) {
        integral += gl16_panels(f, lo, 2.0 * lo, panels_for(lo, 2.0 * lo));
        lo *= 2.0;
    }
    integral += gl16_panels(f, lo, T, panels_for(lo, T));
    return std::min(1.0, std::max(0.0, 0.5 + integral / M_PI));
}

void StableLaw::build_grid() {
    grid_lo_ = -64.0;
    grid_hi_ = 16.0;
    grid_step_ = 1.0 / 64.0;
    const auto n = static_cast<std::size_t>(std::llround((grid_hi_ - grid_lo_) / grid_step_)) + 1;
    std::vector<double> dens(n);
    for (std::size_t i = 0; i < n; ++i)
        dens[i] = std::max(0.0, density(grid_lo_ + static_cast<double>(i) * grid_step_));

    // cumulative integration between Gil-Pelaez anchors every 4 units kills
    // quadrature drift; inside a segment use the O(h^4) three-point rule
    grid_f_.resize(n);
    constexpr std::size_t kAnchorStride = 256;
    double anchor = gil_pelaez_cdf(grid_lo_);
    grid_f_[0] = anchor;
    for (std::size_t seg = 0; seg < n - 1; seg += kAnchorStride) {
        const std::size_t end = std::min(seg + kAnchorStride, n - 1);
        double acc = grid_f_[seg];
        for (std::size_t i = seg; i < end; ++i) {
            const double f0 = dens[i];
            const double f1 = dens[i + 1];
            const double f2 = dens[i + 2 < n ? i + 2 : i + 1];
            acc += grid_step_ * (5.0 * f0 + 8.0 * f1 - f2) / 12.0;
            grid_f_[i + 1] = acc;
        }
        if (end < n - 1) {
            const double next_anchor =
                gil_pelaez_cdf(grid_lo_ + static_cast<double>(end) * grid_step_);
            if (std::fabs(next_anchor - grid_f_[end]) > 2e-5)
                throw NumericalError("StableLaw: inversion drift above error budget");
            grid_f_[end] = next_anchor;
        }
    }
    if (std::fabs(grid_f_[n - 1] - 1.0) > 2e-5)
        throw NumericalError("StableLaw: density mass misses 1 beyond budget");
    // clamp to [0,1] and enforce monotonicity at anchor seams
    double prev = 0.0;
    for (auto& v : grid_f_) {
        v = std::min(1.0, std::max(v, prev));
        prev = v;
    }
}

double StableLaw::cdf(double x) const {
    if (x <= grid_lo_) return gil_pelaez_cdf(x);
    if (x >= grid_hi_) return 1.0;
    const double pos = (x - grid_lo_) / grid_step_;
    auto i = static_cast<std::size_t>(pos);
    if (i >= grid_f_.size() - 1) i = grid_f_.size() - 2;
    const double frac = pos - static_cast<double>(i);
    return grid_f_[i] * (1.0 - frac) + grid_f_[i + 1] * frac;
}

double StableLaw::total_mass() const {
    // left tail by Gil-Pelaez plus direct quadrature of the inverted density
    auto f = [this](double u) { return density(u); };
    const int n_panels = static_cast<int>((grid_hi_ - grid_lo_) / 0.25);
    const double body = gl16_panels(f, grid_lo_, grid_hi_, n_panels);
    return body + gil_pelaez_cdf(grid_lo_);
}

double StableLaw::mean_quadrature() const {
    // E X = int_{-G}^{hi} u f(u) du  - G F(-G) - int_G^inf F(-v) dv,
    // from integration by parts on the left tail.  The [G, V] stretch uses
    // Gil-Pelaez values on a log grid; beyond V the Levy-measure equivalence
    // P(X < -v) = v^{-alpha} (1 + c2 v^{-alpha} + ...) applies, with c2
    // fitted from Gil-Pelaez just inside V.
    const double G = -grid_lo_;
    auto uf = [this](double u) { return u * density(u); };
    const double body = gl16_panels(uf, grid_lo_, grid_hi_, 2 * static_cast<int>(G - grid_lo_));
    const double V = 2048.0;
    auto fv = [this](double s) {
        const double v = std::exp(s);
        return gil_pelaez_cdf(-v) * v;  // substitution v = e^s
    };
    const double mid = gl16_panels(fv, std::log(G), std::log(V),
                                   static_cast<int>(std::ceil(6.0 * std::log(V / G))) + 4);
    auto excess = [this](double v) {
        return (gil_pelaez_cdf(-v) - std::pow(v, -alpha_)) * std::pow(v, 2.0 * alpha_);
    };
    const double c2 = 0.5 * (excess(0.75 * V) + excess(V));
    const double far = std::pow(V, 1.0 - alpha_) / (alpha_ - 1.0) +
                       c2 * std::pow(V, 1.0 - 2.0 * alpha_) / (2.0 * alpha_ - 1.0);
    return body - G * gil_pelaez_cdf(-G) - (mid + far);
}

double StableLaw::bulk_marginal_cdf(double x, double t) const {
    if (!(t > 0.0)) throw std::domain_error("bulk_marginal_cdf: t > 0 required");
    return 1.0 - cdf(-x * std::pow(t, -1.0 / alpha_));
}

}  // namespace zrp
