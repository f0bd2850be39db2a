#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "wavekin/lattice.hpp"
#include "wavekin/resonance_sum.hpp"

using namespace wavekin;

namespace {

// independent oracle: direct double loop over the cut lattice ball with the
// orthogonality condition checked pointwise
double brute_pair_sum(const pair_fn& Phi, int d, double L, double box,
                      bool exclude_zeros) {
    const long long R = static_cast<long long>(std::floor(box * L));
    const long long R2i = R * R;
    std::vector<ivec> pts;
    ivec m(d, -R);
    for (;;) {
        if (inorm2(m) <= R2i) pts.push_back(m);
        int axis = 0;
        while (axis < d && ++m[axis] > R) {
            m[axis] = -R;
            ++axis;
        }
        if (axis == d) break;
    }
    double sum = 0;
    std::vector<double> z1(d), z2(d);
    for (const auto& m1 : pts)
        for (const auto& m2 : pts) {
            if (idot(m1, m2) != 0) continue;
            if (exclude_zeros && (is_zero_vec(m1) || is_zero_vec(m2)))
                continue;
            for (int t = 0; t < d; ++t) {
                z1[t] = m1[t] / L;
                z2[t] = m2[t] / L;
            }
            sum += Phi(z1, z2);
        }
    return sum * std::pow(L, 2.0 * (1 - d)) /
           (d == 2 ? std::log(L) : 1.0);
}

struct brute_nsum {
    double value = 0;
    unsigned long long count = 0;
};

// direct N-fold loop over ball tuples with the full admissibility gate
brute_nsum brute_tuple_sum(const tuple_fn& Phi, const incidence_matrix& alpha,
                           int d, double L, double box) {
    const int N = alpha.N;
    const long long R = static_cast<long long>(std::floor(box * L));
    const long long R2i = R * R;
    std::vector<ivec> pts;
    ivec m(d, -R);
    for (;;) {
        if (!is_zero_vec(m) && inorm2(m) <= R2i) pts.push_back(m);
        int axis = 0;
        while (axis < d && ++m[axis] > R) {
            m[axis] = -R;
            ++axis;
        }
        if (axis == d) break;
    }
    brute_nsum out;
    std::vector<ivec> z(N);
    std::vector<std::vector<double>> zs(N, std::vector<double>(d));
    std::vector<std::size_t> idx(N, 0);
    for (;;) {
        for (int j = 0; j < N; ++j) z[j] = pts[idx[j]];
        bool ok = true;
        for (int j = 0; j < N && ok; ++j) {
            const ivec aj = alpha_apply(alpha, z, j);
            if (is_zero_vec(aj) || omega_form(alpha, z, j) != 0) ok = false;
        }
        if (ok) {
            for (int j = 0; j < N; ++j)
                for (int t = 0; t < d; ++t) zs[j][t] = z[j][t] / L;
            out.value += Phi(zs);
            out.count += 1;
        }
        int axis = 0;
        while (axis < N && ++idx[axis] == pts.size()) {
            idx[axis] = 0;
            ++axis;
        }
        if (axis == N) break;
    }
    double norm = std::pow(L, N * (1.0 - d));
    if (d == 2) norm *= std::pow(std::log(L), -N / 2.0);
    out.value *= norm;
    return out;
}

double gauss_pair(const std::vector<double>& z1, const std::vector<double>& z2) {
    double p = 0, q = 0;
    for (double v : z1) p += v * v;
    for (double v : z2) q += v * v;
    return std::exp(-p - 1.3 * q);
}

tuple_fn gauss_tuple() {
    return [](const std::vector<std::vector<double>>& z) {
        double s = 0;
        for (const auto& zj : z)
            for (double v : zj) s += v * v;
        return std::exp(-s);
    };
}

}  // namespace

TEST_CASE("pair sum matches the direct double loop") {
    resonance_sum_options opts;
    opts.box = 2.0;
    for (int d : {2, 3}) {
        const double L = d == 2 ? 2.5 : 2.0;
        const double brute = brute_pair_sum(gauss_pair, d, L, opts.box, true);
        const auto sep = pair_weight::gaussian(1.0, 1.0, 1.3);
        const auto gen = pair_weight::generic(gauss_pair);
        CHECK(resonance_sum_2(sep, d, L, opts) ==
              doctest::Approx(brute).epsilon(1e-12));
        CHECK(resonance_sum_2(gen, d, L, opts) ==
              doctest::Approx(brute).epsilon(1e-12));

        opts.exclude_zeros = false;
        const double brute0 = brute_pair_sum(gauss_pair, d, L, opts.box, false);
        CHECK(resonance_sum_2(sep, d, L, opts) ==
              doctest::Approx(brute0).epsilon(1e-12));
        CHECK(resonance_sum_2(gen, d, L, opts) ==
              doctest::Approx(brute0).epsilon(1e-12));
        opts.exclude_zeros = true;
    }
}

TEST_CASE("separable and generic paths agree at larger radius") {
    resonance_sum_options opts;
    opts.box = 3.0;
    const auto sep = pair_weight::gaussian(2.5, 1.0, 0.7);
    const auto gen = pair_weight::generic(
        [](const std::vector<double>& z1, const std::vector<double>& z2) {
            double p = 0, q = 0;
            for (double v : z1) p += v * v;
            for (double v : z2) q += v * v;
            return 2.5 * std::exp(-p - 0.7 * q);
        });
    for (int d : {2, 3}) {
        const double L = 4.0;
        const double a = resonance_sum_2(sep, d, L, opts);
        const double b = resonance_sum_2(gen, d, L, opts);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
        CHECK(a > 0.0);
    }
}

TEST_CASE("parallel reduction is bit-identical to serial") {
    resonance_sum_options par, ser;
    par.box = ser.box = 4.0;
    ser.parallel = false;
    const auto sep = pair_weight::gaussian(1.0, 0.9, 1.1);
    CHECK(resonance_sum_2(sep, 3, 6.0, par) == resonance_sum_2(sep, 3, 6.0, ser));

    const incidence_matrix alpha = incidence_matrix::cyclic(3);
    par.box = ser.box = 0.0;
    const auto Phi = gauss_tuple();
    CHECK(resonance_sum_N(Phi, alpha, 2, 3.0, 1.5, par) ==
          resonance_sum_N(Phi, alpha, 2, 3.0, 1.5, ser));
}

TEST_CASE("zero weight sums to zero and linearity holds") {
    resonance_sum_options opts;
    opts.box = 2.0;
    const auto zero = pair_weight::generic(
        [](const std::vector<double>&, const std::vector<double>&) {
            return 0.0;
        });
    CHECK(resonance_sum_2(zero, 2, 2.0, opts) == 0.0);

    const auto f = pair_weight::generic(gauss_pair);
    const auto g = pair_weight::generic(
        [](const std::vector<double>& z1, const std::vector<double>& z2) {
            double p = 0, q = 0;
            for (double v : z1) p += v * v;
            for (double v : z2) q += v * v;
            return std::exp(-2.0 * p - 0.5 * q);
        });
    const auto combo = pair_weight::generic(
        [&](const std::vector<double>& z1, const std::vector<double>& z2) {
            return 2.0 * gauss_pair(z1, z2) - 0.5 * g.eval(z1, z2);
        });
    const double sf = resonance_sum_2(f, 2, 3.0, opts);
    const double sg = resonance_sum_2(g, 2, 3.0, opts);
    const double sc = resonance_sum_2(combo, 2, 3.0, opts);
    CHECK(sc == doctest::Approx(2.0 * sf - 0.5 * sg).epsilon(1e-12));
}

TEST_CASE("slow polynomial decay is rejected by the probe") {
    const auto slow = pair_weight::generic(
        [](const std::vector<double>& z1, const std::vector<double>& z2) {
            double n = 1.0;
            for (double v : z1) n += v * v;
            for (double v : z2) n += v * v;
            return std::pow(n, -1.5);
        });
    CHECK_THROWS_AS(resonance_sum_2(slow, 2, 4.0, {}), std::domain_error);

    const auto slow_sep = pair_weight::product(
        [](double p) { return std::pow(1.0 + p, -2.0); },
        [](double q) { return std::pow(1.0 + q, -2.0); });
    CHECK_THROWS_AS(resonance_sum_2(slow_sep, 3, 4.0, {}), std::domain_error);

    CHECK_THROWS_AS(resonance_sum_2(pair_weight::gaussian(1, 1, 1), 1, 4.0, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(resonance_sum_2(pair_weight::gaussian(1, 1, 1), 2, 1.0, {}),
                    std::invalid_argument);
}

TEST_CASE("including the zero terms shifts the sum by O(L^(2-d))") {
    const auto sep = pair_weight::gaussian(1.0, 1.0, 1.0);
    resonance_sum_options incl, excl;
    incl.box = excl.box = 3.0;
    incl.exclude_zeros = false;
    double prev_scaled = 0;
    for (double L : {4.0, 8.0, 16.0}) {
        const double diff = resonance_sum_2(sep, 3, L, incl) -
                            resonance_sum_2(sep, 3, L, excl);
        CHECK(diff > 0.0);
        const double scaled = diff * L;  // d = 3: diff ~ 1/L
        if (prev_scaled > 0)
            CHECK(scaled == doctest::Approx(prev_scaled).epsilon(0.25));
        prev_scaled = scaled;
    }
}

TEST_CASE("gaussian pair sum approaches its lattice limit") {
    // the limit of the normalized orthogonal-pair sum is the singular
    // series of the quadric z1.z2 = 0, which is zeta(2)/zeta(3) at d = 3,
    // times the surface integral 2 pi^2 of the gaussian
    const double target = std::riemann_zeta(2.0) / std::riemann_zeta(3.0) *
                          2.0 * M_PI * M_PI;
    const auto sep = pair_weight::gaussian(1.0, 1.0, 1.0);
    resonance_sum_options opts;
    opts.box = 4.5;
    const double s8 = resonance_sum_2(sep, 3, 8.0, opts);
    const double s16 = resonance_sum_2(sep, 3, 16.0, opts);
    CHECK(std::fabs(s8 - target) / target < 0.15);
    CHECK(std::fabs(s16 - target) / target < 0.08);
    CHECK(std::fabs(s16 - target) < 0.55 * std::fabs(s8 - target));
}

TEST_CASE("N = 2 sum agrees with the pair sum") {
    const incidence_matrix alpha = incidence_matrix::pair();
    const auto Phi = [](const std::vector<std::vector<double>>& z) {
        double p = 0, q = 0;
        for (double v : z[0]) p += v * v;
        for (double v : z[1]) q += v * v;
        return std::exp(-p - 1.3 * q);
    };
    resonance_sum_options opts;
    opts.box = 2.0;
    for (int d : {2, 3}) {
        const double L = 2.5;
        const double via_pair =
            resonance_sum_2(pair_weight::generic(gauss_pair), d, L, opts);
        const auto info = resonance_sum_N_info(Phi, alpha, d, L, 2.0, {});
        CHECK(info.value == doctest::Approx(via_pair).epsilon(1e-12));
        CHECK(info.admissible_points > 0);
        CHECK(info.tail_bound >= 0.0);
    }
}

TEST_CASE("a zero incidence row leaves no admissible tuples") {
    incidence_matrix alpha = incidence_matrix::cyclic(3);
    // wipe row 1 (and column 1, preserving skew-symmetry)
    for (int i = 0; i < 3; ++i) alpha.a[1][i] = alpha.a[i][1] = 0;
    CHECK_THROWS_WITH_AS(resonance_sum_N(gauss_tuple(), alpha, 2, 2.0, 1.0, {}),
                         "resonance_sum_N: empty admissible set Z",
                         std::domain_error);
}

TEST_CASE("cyclic N = 3 sum matches the direct triple loop") {
    const incidence_matrix alpha = incidence_matrix::cyclic(3);
    const auto Phi = gauss_tuple();
    SUBCASE("d = 2") {
        const auto brute = brute_tuple_sum(Phi, alpha, 2, 2.0, 2.0);
        const auto info = resonance_sum_N_info(Phi, alpha, 2, 2.0, 2.0, {});
        CHECK(info.value == doctest::Approx(brute.value).epsilon(1e-12));
        CHECK(info.admissible_points == brute.count);
        CHECK(brute.count > 0);
    }
    SUBCASE("d = 3") {
        const auto brute = brute_tuple_sum(Phi, alpha, 3, 2.0, 1.5);
        const auto info = resonance_sum_N_info(Phi, alpha, 3, 2.0, 1.5, {});
        CHECK(info.value == doctest::Approx(brute.value).epsilon(1e-12));
        CHECK(info.admissible_points == brute.count);
        CHECK(brute.count > 0);
    }
}

TEST_CASE("cyclic N = 4 sum matches the direct quadruple loop") {
    const incidence_matrix alpha = incidence_matrix::cyclic(4);
    const auto Phi = gauss_tuple();
    SUBCASE("d = 2") {
        const auto brute = brute_tuple_sum(Phi, alpha, 2, 2.0, 1.5);
        const auto info = resonance_sum_N_info(Phi, alpha, 2, 2.0, 1.5, {});
        CHECK(info.value == doctest::Approx(brute.value).epsilon(1e-12));
        CHECK(info.admissible_points == brute.count);
        CHECK(brute.count > 0);
    }
    SUBCASE("d = 3") {
        const auto brute = brute_tuple_sum(Phi, alpha, 3, 2.0, 1.0);
        const auto info = resonance_sum_N_info(Phi, alpha, 3, 2.0, 1.0, {});
        CHECK(info.value == doctest::Approx(brute.value).epsilon(1e-12));
        CHECK(info.admissible_points == brute.count);
        CHECK(brute.count > 0);
    }
}

TEST_CASE("fully coupled N = 4 incidence uses the general solve") {
    incidence_matrix alpha;
    alpha.N = 4;
    alpha.a.assign(4, std::vector<int>(4, 0));
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            alpha.a[i][j] = 1;
            alpha.a[j][i] = -1;
        }
    alpha.validate();
    CHECK(alpha.irreducible());
    const auto Phi = gauss_tuple();
    const auto brute = brute_tuple_sum(Phi, alpha, 2, 2.0, 1.0);
    const auto info = resonance_sum_N_info(Phi, alpha, 2, 2.0, 1.0, {});
    CHECK(info.value == doctest::Approx(brute.value).epsilon(1e-12));
    CHECK(info.admissible_points == brute.count);
}

TEST_CASE("block-diagonal N = 4 incidence splits into two pair sums") {
    incidence_matrix alpha;
    alpha.N = 4;
    alpha.a.assign(4, std::vector<int>(4, 0));
    alpha.a[0][1] = 1;
    alpha.a[1][0] = -1;
    alpha.a[2][3] = 1;
    alpha.a[3][2] = -1;
    alpha.validate();
    CHECK_FALSE(alpha.irreducible());
    const auto Phi = gauss_tuple();
    const auto brute = brute_tuple_sum(Phi, alpha, 2, 2.0, 1.5);
    const auto info = resonance_sum_N_info(Phi, alpha, 2, 2.0, 1.5, {});
    CHECK(info.value == doctest::Approx(brute.value).epsilon(1e-12));
    CHECK(info.admissible_points == brute.count);
    CHECK(brute.count > 0);
}

TEST_CASE("argument validation for the N-fold sum") {
    const incidence_matrix alpha = incidence_matrix::cyclic(3);
    CHECK_THROWS_AS(resonance_sum_N(gauss_tuple(), alpha, 2, 1.0, 2.0, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(resonance_sum_N(gauss_tuple(), alpha, 1, 2.0, 2.0, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(resonance_sum_N(gauss_tuple(), alpha, 2, 2.0, -1.0, {}),
                    std::invalid_argument);
}
