#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "wavekin/kernels.hpp"
#include "wavekin/quadrules.hpp"
#include "wavekin/rng.hpp"

using namespace wavekin;

namespace {

// reference for T: int_0^tau e^{-Gamma tau + delta u} du by dense
// Gauss-Legendre; the integrand is a single smooth exponential
double T_by_quadrature(double gs, double Gamma, double tau) {
    const auto& gl = gauss_legendre(48);
    const double delta = Gamma - 2.0 * gs;
    double sum = 0.0;
    for (int i = 0; i < 48; ++i) {
        const double u = 0.5 * tau * (1.0 + gl.x[i]);
        sum += 0.5 * tau * gl.w[i] * std::exp(-Gamma * tau + delta * u);
    }
    return sum;
}

// all-equal-rates kernel through an independent expansion of (1 - x)^3
double Z_equal_rates(double c, double tau) {
    const double num =
        std::exp(-4.0 * c * tau) *
        ((std::exp(4.0 * c * tau) - 1.0) / (4.0 * c) -
         3.0 * (std::exp(2.0 * c * tau) - 1.0) / (2.0 * c) + 3.0 * tau +
         (std::exp(-2.0 * c * tau) - 1.0) / (2.0 * c));
    const double den = std::pow(-std::expm1(-2.0 * c * tau), 3);
    return num / den;
}

gamma_quad random_rates(const counter_rng& rng, std::uint64_t rep,
                        double lo_exp, double hi_exp) {
    gamma_quad g;
    for (int m = 0; m < 4; ++m)
        g.g[m] = std::pow(10.0, lo_exp + (hi_exp - lo_exp) *
                                             rng.uniform(rep, 10 + m));
    return g;
}

}  // namespace

TEST_CASE("T factor handles separated, degenerate and extreme rates") {
    // well-separated rates against the quadrature of the defining integral
    for (auto [gs, Gamma, tau] :
         {std::tuple{0.3, 2.0, 1.7}, std::tuple{1.4, 2.0, 0.4},
          std::tuple{0.0, 5.0, 2.0}, std::tuple{2.4, 3.0, 1.1}}) {
        CHECK(T_factor(gs, Gamma, tau) ==
              doctest::Approx(T_by_quadrature(gs, Gamma, tau)).epsilon(1e-13));
    }

    // exactly degenerate: Gamma = 2 gs collapses to tau e^{-Gamma tau}
    CHECK(T_factor(1.0, 2.0, 5.0) ==
          doctest::Approx(5.0 * std::exp(-10.0)).epsilon(1e-15));

    // nearly degenerate: still matches the smooth integral
    const double gs_near = 1.0 - 5e-13;
    CHECK(T_factor(gs_near, 2.0, 3.0) ==
          doctest::Approx(T_by_quadrature(gs_near, 2.0, 3.0)).epsilon(1e-12));

    // huge positive exponent gap: the e^{-Gamma tau} term is dead
    CHECK(T_factor(0.1, 300.0, 10.0) ==
          doctest::Approx(std::exp(-2.0) / 299.8).epsilon(1e-13));

    // strongly negative delta: expm1 saturates without overflow
    CHECK(T_factor(4.0, 5.0, 20.0) ==
          doctest::Approx(std::exp(-160.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("closed kernel matches the quadrature reference") {
    counter_rng rng{0x2EAL};
    for (std::uint64_t rep = 0; rep < 60; ++rep) {
        const gamma_quad g = random_rates(rng, rep, -1.0, 3.0);
        const double tau0 = std::pow(10.0, -3.0 + 4.0 * rng.uniform(rep, 20));
        for (int j = 0; j < 4; ++j) {
            const double zc = Z_closed(g, j, tau0);
            const double zq = Z_quadrature(g, j, tau0, 1e-11);
            CHECK(std::fabs(zc - zq) <= 1e-8 * std::fabs(zq));
        }
    }

    // tuples that drive a subset denominator Gamma - 2 g_S through zero
    for (double eps : {0.0, 1e-12, 1e-9, 1e-6}) {
        const gamma_quad g{{1.0, 1.0, 1.0, 1.0 + eps}};
        for (int j = 0; j < 4; ++j) {
            const double zc = Z_closed(g, j, 0.8);
            const double zq = Z_quadrature(g, j, 0.8, 1e-11);
            CHECK(std::fabs(zc - zq) <= 1e-8 * std::fabs(zq));
        }
    }

    // both sides of the small-interval switch at Gamma tau0 = 0.02
    const gamma_quad u{{0.3, 0.6, 0.9, 1.2}};  // Gamma = 3
    for (double gt : {1e-5, 1e-3, 0.0199, 0.02, 0.021, 0.2}) {
        const double tau0 = gt / 3.0;
        const double zc = Z_closed(u, 0, tau0);
        const double zq = Z_quadrature(u, 0, tau0, 1e-11);
        CHECK(std::fabs(zc - zq) <= 1e-8 * std::fabs(zq));
    }
}

TEST_CASE("kernel bounds hold across magnitudes") {
    counter_rng rng{0xB0B5};
    for (std::uint64_t rep = 0; rep < 10000; ++rep) {
        const gamma_quad g = random_rates(rng, rep, -2.0, 4.0);
        const double tau0 = std::pow(10.0, -4.0 + 6.0 * rng.uniform(rep, 21));
        const double Gamma = g.total();
        const auto bundle = Z_all(g, tau0);
        for (int j = 0; j < 4; ++j) {
            const double t = Tcal_factor(g, j, tau0);
            CHECK(t >= 0.0);
            CHECK(t <= std::min(tau0, 1.0 / Gamma) * (1.0 + 1e-12));
            const double z = Z_closed(g, j, tau0);
            CHECK(z >= 0.0);
            CHECK(z <= std::min(tau0, 1.0 / g.g[j]) * (1.0 + 1e-12));
            CHECK(bundle.Z[j] == z);  // shared-factor path is the same sum
        }
    }
}

TEST_CASE("Tcal obeys its defining differential identity") {
    // d/dtau0 Tcal + Gamma Tcal = prod_{m != j} (1 - e^{-2 g_m tau0})
    for (const gamma_quad& g :
         {gamma_quad{{1.0, 2.0, 3.0, 4.0}}, gamma_quad{{0.5, 0.5, 2.0, 7.0}},
          gamma_quad{{1.0, 1.0, 1.0, 1.0}}}) {
        const double Gamma = g.total();
        for (double tau0 : {0.3, 1.1}) {
            for (int j = 0; j < 4; ++j) {
                const double h = 1e-5 * tau0;
                const double fd = (Tcal_factor(g, j, tau0 + h) -
                                   Tcal_factor(g, j, tau0 - h)) /
                                  (2.0 * h);
                double prod = 1.0;
                for (int m = 0; m < 4; ++m)
                    if (m != j) prod *= -std::expm1(-2.0 * g.g[m] * tau0);
                const double lhs = fd + Gamma * Tcal_factor(g, j, tau0);
                CHECK(lhs == doctest::Approx(prod).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("kernels forget the cutoff in the long-time limit") {
    CHECK(Z_infinity(gamma_quad{{1, 1, 1, 1}}) == 0.25);
    CHECK(Z_infinity(gamma_quad{{2, 2, 2, 2}}) == 0.125);

    const gamma_quad g{{1.0, 2.0, 3.0, 4.0}};
    for (int j = 0; j < 4; ++j)
        CHECK(Z_closed(g, j, 30.0) ==
              doctest::Approx(Z_infinity(g)).epsilon(1e-12));
}

TEST_CASE("all-equal rates agree with a hand expansion") {
    for (auto [c, tau] : {std::pair{1.0, 0.7}, std::pair{0.3, 2.0}}) {
        const gamma_quad g{{c, c, c, c}};
        for (int j = 0; j < 4; ++j)
            CHECK(Z_closed(g, j, tau) ==
                  doctest::Approx(Z_equal_rates(c, tau)).epsilon(1e-12));
    }
}

TEST_CASE("kernel permutation symmetry in the dropped-factor complement") {
    const gamma_quad a{{1.0, 2.0, 3.0, 4.0}};
    const gamma_quad b{{1.0, 4.0, 3.0, 2.0}};
    CHECK(Z_closed(a, 0, 0.9) == doctest::Approx(Z_closed(b, 0, 0.9)).epsilon(1e-14));
}

TEST_CASE("kernel inputs are validated") {
    const gamma_quad g{{1, 1, 1, 1}};
    CHECK_THROWS_AS(Z_closed(gamma_quad{{0, 1, 1, 1}}, 0, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(Z_closed(g, 4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Z_closed(g, -1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Z_closed(g, 0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(
        Z_closed(g, 0, std::numeric_limits<double>::infinity()),
        std::invalid_argument);
    CHECK_THROWS_AS(Z_quadrature(g, 0, 1.0, 0.0), std::invalid_argument);
}
