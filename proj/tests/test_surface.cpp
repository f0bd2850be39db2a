#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wavekin/surface.hpp"

using namespace wavekin;

namespace {

constexpr double k_pi = 3.14159265358979323846;

// Euler-Maclaurin tail after an explicit partial sum; good to ~1e-14 for
// s >= 2 with M = 30
double em_zeta(double s) {
    const int M = 30;
    double sum = 0.0;
    for (int n = 1; n < M; ++n) sum += std::pow(n, -s);
    const double m = M;
    sum += std::pow(m, 1.0 - s) / (s - 1.0);
    sum += 0.5 * std::pow(m, -s);
    sum += s * std::pow(m, -s - 1.0) / 12.0;
    sum -= s * (s + 1.0) * (s + 2.0) * std::pow(m, -s - 3.0) / 720.0;
    sum += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) *
           std::pow(m, -s - 5.0) / 30240.0;
    return sum;
}

// Euler product of (1 - p^-d) / (1 - p^-(d-1)) over primes up to `top`
double singular_series_product(int d, int top) {
    std::vector<bool> comp(top + 1, false);
    double prod = 1.0;
    for (int p = 2; p <= top; ++p) {
        if (comp[p]) continue;
        for (long long q = static_cast<long long>(p) * p; q <= top; q += p)
            comp[static_cast<std::size_t>(q)] = true;
        prod *= (1.0 - std::pow(p, -d)) / (1.0 - std::pow(p, -(d - 1.0)));
    }
    return prod;
}

pair_weight gauss_times(std::function<double(const std::vector<double>&,
                                             const std::vector<double>&)>
                            factor) {
    return pair_weight::generic(
        [factor](const std::vector<double>& z1, const std::vector<double>& z2) {
            double q = 0.0;
            for (double v : z1) q += v * v;
            for (double v : z2) q += v * v;
            return factor(z1, z2) * std::exp(-q);
        });
}

}  // namespace

TEST_CASE("closed-form constants match an independent zeta evaluation") {
    CHECK(C_d(3) == doctest::Approx(em_zeta(2) * em_zeta(10) /
                                    (em_zeta(3) * em_zeta(4)))
                        .epsilon(1e-12));
    CHECK(C_d(3) == doctest::Approx(1.2656051).epsilon(1e-6));
    for (int d = 3; d <= 10; ++d) {
        CHECK(C_d(d) > 1.0);
        CHECK(C_d(d) < 1.0 + std::pow(2.0, 2 - d));
    }

    CHECK(orthogonality_sum_constant(3) ==
          doctest::Approx(em_zeta(2) / em_zeta(3)).epsilon(1e-12));
    CHECK(orthogonality_sum_constant(3) ==
          doctest::Approx(1.3684328).epsilon(1e-6));

    // the zeta ratio is the Euler product of the local orthogonality densities
    CHECK(orthogonality_sum_constant(3) ==
          doctest::Approx(singular_series_product(3, 100000)).epsilon(1e-4));
    CHECK(orthogonality_sum_constant(4) ==
          doctest::Approx(singular_series_product(4, 100000)).epsilon(1e-6));

    CHECK_THROWS_AS(C_d(2), std::domain_error);
    CHECK_THROWS_AS(C_d(0), std::invalid_argument);
    CHECK_THROWS_AS(orthogonality_sum_constant(2), std::domain_error);
}

TEST_CASE("gaussian surface integral reproduces its closed form") {
    const auto Phi = pair_weight::gaussian(1.0, 1.0, 1.0);

    // d = 2: int |z1|^{-1} e^{-|z1|^2} dz1 * int_R e^{-t^2} dt = pi^{3/2} *
    // sqrt(pi)
    const double I2 = sigma_integral(Phi, 2);
    CHECK(I2 == doctest::Approx(k_pi * k_pi).epsilon(1e-8));

    // d = 3: 2 pi * pi; the weight is isotropic, so thin angular grids are
    // exact and only the radial rule is exercised
    surface_quad_options opt;
    opt.polar = 4;
    opt.azimuthal = 6;
    opt.plane_angle = 4;
    const double I3 = sigma_integral(Phi, 3, opt);
    CHECK(I3 == doctest::Approx(2.0 * k_pi * k_pi).epsilon(1e-8));
}

TEST_CASE("anisotropic weights reproduce closed forms") {
    surface_quad_options opt;
    opt.radial = 40;
    opt.polar = 8;
    opt.azimuthal = 12;
    opt.plane_angle = 12;

    // z1x^2 weight: pi * int r^3 e^{-r^2} dr * int ux^2 dOmega = 2 pi^2 / 3
    const auto Phi1 = gauss_times(
        [](const std::vector<double>& z1, const std::vector<double>&) {
            return z1[0] * z1[0];
        });
    CHECK(sigma_integral(Phi1, 3, opt) ==
          doctest::Approx(2.0 * k_pi * k_pi / 3.0).epsilon(1e-7));

    // z2x^2 weight: same value, by the z1 <-> z2 symmetry of the surface
    const auto Phi2 = gauss_times(
        [](const std::vector<double>&, const std::vector<double>& z2) {
            return z2[0] * z2[0];
        });
    CHECK(sigma_integral(Phi2, 3, opt) ==
          doctest::Approx(2.0 * k_pi * k_pi / 3.0).epsilon(1e-7));
}

TEST_CASE("odd weights integrate to zero") {
    surface_quad_options opt;
    opt.radial = 24;
    opt.polar = 6;
    opt.azimuthal = 8;
    opt.plane_angle = 8;
    const auto odd1 = gauss_times(
        [](const std::vector<double>& z1, const std::vector<double>&) {
            return z1[0];
        });
    const auto odd2 = gauss_times(
        [](const std::vector<double>&, const std::vector<double>& z2) {
            return z2[2];
        });
    CHECK(std::fabs(sigma_integral(odd1, 3, opt)) < 1e-12);
    CHECK(std::fabs(sigma_integral(odd2, 3, opt)) < 1e-12);
}

TEST_CASE("doubling the rule leaves the value fixed") {
    const auto Phi = gauss_times(
        [](const std::vector<double>& z1, const std::vector<double>& z2) {
            return 1.0 + 0.3 * z1[0] * z1[0] + 0.2 * z2[0] * z2[0];
        });
    surface_quad_options lo;
    lo.radial = 48;
    lo.polar = 6;
    lo.azimuthal = 8;
    lo.plane_angle = 8;
    surface_quad_options hi;
    hi.radial = 96;
    hi.polar = 12;
    hi.azimuthal = 16;
    hi.plane_angle = 16;
    const double a = sigma_integral(Phi, 3, lo);
    const double b = sigma_integral(Phi, 3, hi);
    CHECK(std::fabs(a - b) < 1e-6 * std::fabs(b));

    const auto Phi2 = pair_weight::gaussian(1.0, 1.0, 1.3);
    surface_quad_options lo2, hi2;
    lo2.radial = 48;
    hi2.radial = 96;
    const double a2 = sigma_integral(Phi2, 2, lo2);
    const double b2 = sigma_integral(Phi2, 2, hi2);
    CHECK(std::fabs(a2 - b2) < 1e-6 * std::fabs(b2));
}

TEST_CASE("parallel and serial quadratures agree bit for bit") {
    surface_quad_options ser, par;
    ser.radial = par.radial = 20;
    ser.polar = par.polar = 6;
    ser.azimuthal = par.azimuthal = 8;
    ser.plane_angle = par.plane_angle = 8;
    ser.parallel = false;
    par.parallel = true;
    const auto Phi = gauss_times(
        [](const std::vector<double>& z1, const std::vector<double>& z2) {
            return 1.0 + z1[0] * z2[1];
        });
    CHECK(sigma_integral(Phi, 3, ser) == sigma_integral(Phi, 3, par));
}

TEST_CASE("non-decaying weights are rejected") {
    const auto flat = pair_weight::generic(
        [](const std::vector<double>&, const std::vector<double>&) {
            return 1.0;
        });
    CHECK_THROWS_WITH_AS(
        sigma_integral(flat, 3),
        "sigma_integral: weight shows no decay at the truncation radius; "
        "integral may diverge",
        std::domain_error);

    // |z|^-4 overall decay is below the r^3 surface growth margin
    const auto slow = pair_weight::generic(
        [](const std::vector<double>& z1, const std::vector<double>& z2) {
            double q = 1.0;
            for (double v : z1) q += v * v;
            for (double v : z2) q += v * v;
            return 1.0 / (q * q);
        });
    CHECK_THROWS_AS(sigma_integral(slow, 3), std::domain_error);

    const auto zero = pair_weight::generic(
        [](const std::vector<double>&, const std::vector<double>&) {
            return 0.0;
        });
    CHECK(sigma_integral(zero, 3) == 0.0);
}

TEST_CASE("lattice pair sums drift toward the singular-series limit") {
    const auto Phi = pair_weight::gaussian(1.0, 1.0, 1.0);
    resonance_sum_options sum_opts;
    sum_opts.box = 4.5;
    surface_quad_options quad_opts;
    quad_opts.polar = 4;
    quad_opts.azimuthal = 6;
    quad_opts.plane_angle = 4;

    const auto chk = heath_brown_check(Phi, 3, {4.0, 8.0}, sum_opts, quad_opts);
    CHECK(chk.surface == doctest::Approx(2.0 * k_pi * k_pi).epsilon(1e-6));
    CHECK(chk.density_limit ==
          doctest::Approx(orthogonality_sum_constant(3) * chk.surface));
    CHECK(chk.formula_limit == doctest::Approx(C_d(3) * chk.surface));
    REQUIRE(chk.rows.size() == 2);
    CHECK(chk.rows[1].rel_vs_density < chk.rows[0].rel_vs_density);
    // the sums climb toward the singular-series limit from below
    CHECK(chk.rows[1].sum > chk.rows[0].sum);
    for (const auto& row : chk.rows) CHECK(row.sum < chk.density_limit);
}

TEST_CASE("surface quadrature rejects malformed requests") {
    const auto Phi = pair_weight::gaussian(1.0, 1.0, 1.0);
    CHECK_THROWS_AS(sigma_integral(Phi, 4), std::invalid_argument);
    CHECK_THROWS_AS(sigma_integral(Phi, 1), std::invalid_argument);

    surface_quad_options bad;
    bad.r_max = 0.0;
    CHECK_THROWS_AS(sigma_integral(Phi, 3, bad), std::invalid_argument);
    bad = {};
    bad.radial = 1;
    CHECK_THROWS_AS(sigma_integral(Phi, 3, bad), std::invalid_argument);

    pair_weight empty;
    CHECK_THROWS_AS(sigma_integral(empty, 3), std::invalid_argument);
}
