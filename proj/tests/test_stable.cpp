#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "zrp/rng.hpp"
#include "zrp/special.hpp"
#include "zrp/stable.hpp"

using namespace zrp;

TEST_CASE("incomplete gamma against independent identities") {
    // P(1, x) = 1 - e^{-x}; P(1/2, x) = erf(sqrt(x))
    for (const double x : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        CHECK(gamma_p(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-12));
        CHECK(gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
        CHECK(gamma_p(2.3, x) + gamma_q(2.3, x) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // chi-square with one dof: sf(x) = 2 (1 - Phi(sqrt(x)))
    for (const double x : {0.5, 1.0, 4.0, 9.0}) {
        CHECK(chi_square_sf(x, 1.0) ==
              doctest::Approx(2.0 * (1.0 - normal_cdf(std::sqrt(x)))).epsilon(1e-10));
    }
}

TEST_CASE("kolmogorov distribution behaves") {
    CHECK(kolmogorov_sf(0.01) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(kolmogorov_sf(0.5) > kolmogorov_sf(1.0));
    CHECK(kolmogorov_sf(1.0) > kolmogorov_sf(2.0));
    CHECK(kolmogorov_sf(3.0) < 1e-7);
    // 99% quantile near 1.63 (classical table value)
    CHECK(kolmogorov_sf(1.63) == doctest::Approx(0.01).epsilon(0.02));
}

TEST_CASE("stable law characteristic function") {
    const StableLaw law(1.5);
    CHECK(law.char_fn(0.0) == std::complex<double>(1.0, 0.0));
    RngStream rng(123);
    for (int rep = 0; rep < 100; ++rep) {
        const double t = (rng.next_double() - 0.5) * 20.0;
        const auto psi = law.char_fn(t);
        const auto conj_psi = law.char_fn(-t);
        CHECK(std::abs(psi) <= 1.0 + 1e-14);
        CHECK(conj_psi.real() == doctest::Approx(psi.real()).epsilon(1e-14));
        CHECK(conj_psi.imag() == doctest::Approx(-psi.imag()).epsilon(1e-14));
    }
}

TEST_CASE("quadrature schemes for C_alpha agree") {
    for (const double alpha : {1.2, 1.5, 1.8}) {
        const StableLaw law(alpha);
        CHECK(law.c_alpha() > 0.0);
        CHECK(law.c_alpha_spread() < 1e-8);
        // log psi(1) recovered by the characteristic function itself
        const auto psi1 = law.char_fn(1.0);
        const double tan_half = std::tan(M_PI * alpha / 2.0);
        const std::complex<double> expect =
            std::exp(std::complex<double>(-law.c_alpha(), -law.c_alpha() * tan_half));
        CHECK(psi1.real() == doctest::Approx(expect.real()).epsilon(1e-10));
        CHECK(psi1.imag() == doctest::Approx(expect.imag()).epsilon(1e-10));
    }
}

TEST_CASE("stable density: nonnegative, unit mass, centered") {
    for (const double alpha : {1.2, 1.5, 1.8}) {
        const StableLaw law(alpha);
        for (double u = -20.0; u <= 20.0; u += 0.5) CHECK(law.density(u) >= -1e-12);
        CHECK(std::fabs(law.total_mass() - 1.0) < 1e-6);
        CHECK(std::fabs(law.mean_quadrature()) < 1e-4);
    }
}

TEST_CASE("stable cdf sanity and positivity parameter") {
    for (const double alpha : {1.2, 1.5, 1.8}) {
        const StableLaw law(alpha);
        // P(X <= 0) = 1/2 + arctan(tan(pi alpha/2)) / (pi alpha) for the
        // completely asymmetric orientation (verified against quadrature)
        const double f0 = 0.5 + std::atan(std::tan(M_PI * alpha / 2.0)) / (M_PI * alpha);
        CHECK(law.cdf(0.0) == doctest::Approx(f0).epsilon(2e-5));
        // monotone on a grid
        double prev = -0.1;
        for (double x = -30.0; x <= 10.0; x += 0.25) {
            const double f = law.cdf(x);
            CHECK(f >= prev - 1e-12);
            prev = f;
        }
        CHECK(law.cdf(-500.0) > 0.0);
        CHECK(law.cdf(-500.0) < 0.01);
        CHECK(law.cdf(15.9) > 0.999);
        // grid cdf agrees with the independent Gil-Pelaez route
        for (const double x : {-8.0, -2.0, -0.5, 0.7, 2.5}) {
            CHECK(law.cdf(x) == doctest::Approx(law.gil_pelaez_cdf(x)).epsilon(5e-5));
        }
    }
}

TEST_CASE("bulk process marginal is the mirrored scaled law") {
    const StableLaw law(1.5);
    for (const double x : {-3.0, -1.0, 0.0, 1.5, 4.0}) {
        CHECK(law.bulk_marginal_cdf(x, 1.0) == doctest::Approx(1.0 - law.cdf(-x)).epsilon(1e-12));
        // scaling in t: P(xi(t) <= x) = P(xi(1) <= x t^{-1/alpha})
        CHECK(law.bulk_marginal_cdf(x, 0.5) ==
              doctest::Approx(law.bulk_marginal_cdf(x * std::pow(0.5, -1.0 / 1.5), 1.0))
                  .epsilon(1e-12));
    }
}

TEST_CASE("alpha domain is enforced") {
    CHECK_THROWS_AS(StableLaw(1.0), std::domain_error);
    CHECK_THROWS_AS(StableLaw(2.0), std::domain_error);
    CHECK_THROWS_AS(StableLaw(0.5), std::domain_error);
}
