#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wavekin/quadric.hpp"
#include "wavekin/rng.hpp"

using namespace wavekin;

namespace {

// random integer in [-range, range]
long long rint(const counter_rng& rng, std::uint64_t a, std::uint64_t b,
               long long range) {
    return static_cast<long long>(rng.word(a, b) % (2 * range + 1)) - range;
}

ivec rvec(const counter_rng& rng, std::uint64_t a, std::uint64_t b0, int d,
          long long range) {
    ivec z(d);
    for (int t = 0; t < d; ++t) z[t] = rint(rng, a, b0 + t, range);
    return z;
}

// random skew matrix with entries in {-1,0,1}, nonzero (1,N) entry,
// connected support graph
incidence_matrix random_admissible(const counter_rng& rng, std::uint64_t a,
                                   int N) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        incidence_matrix al;
        al.N = N;
        al.a.assign(N, std::vector<int>(N, 0));
        std::uint64_t k = 0;
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) {
                const int e =
                    static_cast<int>(rng.word(a, attempt * 64 + k++) % 3) - 1;
                al.a[i][j] = e;
                al.a[j][i] = -e;
            }
        if (al.a[0][N - 1] == 0) continue;
        if (!al.irreducible()) continue;
        return al;
    }
}

// v orthogonal to z1, nonzero, from small integer combinations of an exact
// basis of the orthogonal sublattice
ivec random_perp(const counter_rng& rng, std::uint64_t a, const ivec& z1) {
    const auto basis = orthogonal_basis(z1);
    for (std::uint64_t attempt = 0;; ++attempt) {
        ivec v(z1.size(), 0);
        for (std::size_t k = 0; k < basis.size(); ++k) {
            const long long c = rint(rng, a, 7000 + attempt * 8 + k, 2);
            for (std::size_t t = 0; t < v.size(); ++t)
                v[t] += c * basis[k][t];
        }
        if (!is_zero_vec(v)) return v;
    }
}

}  // namespace

TEST_CASE("integer polynomials evaluate exactly, plainly and mod p") {
    int_polynomial q;
    q.vars = 2;
    q.add_term(3, {2, 0});
    q.add_term(-2, {1, 1});
    q.add_term(1, {0, 1});
    q.add_term(-7, {0, 0});
    CHECK(q.total_degree() == 2);
    CHECK(q.eval({2, 5}) == 3 * 4 - 2 * 10 + 5 - 7);
    CHECK(q.eval_mod({2, 5}, 7) == ((3 * 4 - 2 * 10 + 5 - 7) % 7 + 7) % 7);

    // duplicate monomials merge; exact cancellation drops the term
    q.add_term(2, {1, 1});
    CHECK(q.eval({2, 5}) == 3 * 4 + 5 - 7);
    CHECK(q.terms.size() == 3);

    CHECK_THROWS_AS(q.eval({1}), std::invalid_argument);
    CHECK_THROWS_AS(q.add_term(1, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("quadric system matches the resonance forms after eliminating z_N") {
    counter_rng rng{0xE11D};
    for (int N : {3, 4})
        for (int d : {2, 3})
            for (std::uint64_t rep = 0; rep < 40; ++rep) {
                const std::uint64_t tag = (N * 10 + d) * 1000 + rep;
                const auto alpha = random_admissible(rng, tag, N);
                const int e = alpha.a[0][N - 1];

                const ivec z1 = rvec(rng, tag, 100, d, 4);
                const ivec v = rvec(rng, tag, 200, d, 4);
                std::vector<ivec> z(N);
                z[0] = z1;
                std::vector<long long> x;
                for (int i = 1; i <= N - 2; ++i) {
                    z[i] = rvec(rng, tag, 300 + 10 * i, d, 4);
                    x.insert(x.end(), z[i].begin(), z[i].end());
                }
                // z_N is the unique vector making (alpha z)_1 equal v
                ivec zN(d);
                for (int t = 0; t < d; ++t) {
                    long long acc = v[t];
                    for (int i = 1; i <= N - 2; ++i)
                        acc -= alpha.a[0][i] * z[i][t];
                    zN[t] = e * acc;
                }
                z[N - 1] = zN;
                CHECK(alpha_apply(alpha, z, 0) == v);

                const auto polys = quadric_system(alpha, z1, v);
                REQUIRE(static_cast<int>(polys.size()) == N - 2);
                for (int j = 1; j <= N - 2; ++j) {
                    CHECK(polys[j - 1].vars == (N - 2) * d);
                    CHECK(polys[j - 1].total_degree() <= 2);
                    CHECK(polys[j - 1].eval(x) == omega_form(alpha, z, j));
                }
            }
}

TEST_CASE("quadric system requires a nonzero corner incidence entry") {
    incidence_matrix alpha;
    alpha.N = 3;
    alpha.a = {{0, 1, 0}, {-1, 0, 1}, {0, -1, 0}};
    CHECK_THROWS_AS(quadric_system(alpha, {1, 0}, {0, 1}),
                    std::invalid_argument);
}

TEST_CASE("zero box radius leaves only the origin on the quadrics") {
    const auto alpha = incidence_matrix::cyclic(3);
    const auto r = quadric_intersection_count(alpha, {1, 0}, {0, 1}, 0.0, 8.0);
    CHECK(r.count == 1);
    CHECK(r.bound == doctest::Approx(4.0));  // 2^((N-2)d), radius base clamps to 1
    CHECK(r.ratio <= 1.0);
}

TEST_CASE("hand count for the cyclic three-wave quadric") {
    // cyclic N=3, z1=(1,0), v=(0,1): the single quadric reduces to
    // |z2|^2 = z2 . (z1 + v), whose integer solutions are {0,1}^2
    const auto alpha = incidence_matrix::cyclic(3);
    const ivec z1{1, 0}, v{0, 1};

    const auto polys = quadric_system(alpha, z1, v);
    REQUIRE(polys.size() == 1);
    long long brute = 0;
    for (long long x = -4; x <= 4; ++x)
        for (long long y = -4; y <= 4; ++y)
            if (polys[0].eval({x, y}) == 0) ++brute;
    CHECK(brute == 4);

    const auto r = quadric_intersection_count(alpha, z1, v, 2.0, 2.0);
    CHECK(r.count == 4);
    CHECK(r.bound == doctest::Approx(4.0 * 12.0));
    CHECK(r.ratio <= 1.0);
}

TEST_CASE("the two-wave case has a single admissible point") {
    const auto r = quadric_intersection_count(incidence_matrix::pair(), {1, 0},
                                              {0, 1}, 3.0, 2.0);
    CHECK(r.count == 1);
    CHECK(r.bound == doctest::Approx(1.0));
    CHECK(r.ratio == doctest::Approx(1.0));
}

TEST_CASE("random admissible pairs stay under the lattice point bound") {
    counter_rng rng{0xB0B0};
    int done = 0;
    for (std::uint64_t rep = 0; done < 100; ++rep) {
        const int N = 3 + static_cast<int>(rng.word(rep, 1) % 2);
        const int d = 2 + static_cast<int>(rng.word(rep, 2) % 2);
        // keep the exact enumeration cheap: six middle coordinates only get
        // the small boxes
        const long long cap = ((N - 2) * d >= 6) ? 3 : 6;
        const long long RL = 1 + static_cast<long long>(rng.word(rep, 3) %
                                                        static_cast<std::uint64_t>(cap));
        const auto alpha = random_admissible(rng, 5000 + rep, N);

        ivec z1 = rvec(rng, rep, 40, d, 3);
        if (is_zero_vec(z1)) z1[0] = 1;
        const ivec v = random_perp(rng, rep, z1);

        const auto r = quadric_intersection_count(alpha, z1, v,
                                                  static_cast<double>(RL) / 2.0,
                                                  2.0);
        CHECK(r.count >= 1);  // the origin always solves the system
        CHECK(r.ratio <= 1.0);
        ++done;
    }
}

TEST_CASE("finite field counts respect the Bezout product") {
    // single coordinate hyperplane in F_5^2
    int_polynomial x1;
    x1.vars = 2;
    x1.add_term(1, {1, 0});
    const auto h = finite_field_count({x1}, 5, 2);
    CHECK(h.count == 5);
    CHECK(h.bezout_bound == doctest::Approx(5.0));

    // split quadric x1 x2 = 0: union of two hyperplanes, 2p - 1 points
    int_polynomial xy;
    xy.vars = 2;
    xy.add_term(1, {1, 1});
    for (long long p : {2LL, 5LL, 7LL, 11LL}) {
        const auto r = finite_field_count({xy}, p, 2);
        CHECK(r.count == static_cast<unsigned long long>(2 * p - 1));
        CHECK(r.bezout_bound == doctest::Approx(2.0 * static_cast<double>(p)));
        CHECK(static_cast<double>(r.count) <= r.bezout_bound);
    }
}

TEST_CASE("cyclic four-wave quadrics over F_7") {
    // with z1=(1,0), v=(0,1) the system is z2.(z3 - z1) = 0 and z3.v = 0;
    // counting by cases over z3 gives 49 + 6*7 = 91 points
    const auto polys =
        quadric_system(incidence_matrix::cyclic(4), {1, 0}, {0, 1});
    REQUIRE(polys.size() == 2);
    CHECK(polys[0].total_degree() == 2);
    CHECK(polys[1].total_degree() == 1);

    const auto r = finite_field_count(polys, 7, 4);
    CHECK(r.count == 91);
    CHECK(r.bezout_bound == doctest::Approx(49.0 * 2.0));
    CHECK(static_cast<double>(r.count) <= r.bezout_bound);
}

TEST_CASE("argument validation rejects degenerate quadric inputs") {
    const auto alpha = incidence_matrix::cyclic(3);
    CHECK_THROWS_AS(quadric_intersection_count(alpha, {0, 0}, {0, 1}, 1, 2),
                    std::invalid_argument);
    CHECK_THROWS_AS(quadric_intersection_count(alpha, {1, 0}, {0, 0}, 1, 2),
                    std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        quadric_intersection_count(alpha, {1, 0}, {1, 1}, 1, 2),
        "quadric_intersection_count: hypothesis (z1, v) in Q^0_1 violated",
        std::invalid_argument);
    CHECK_THROWS_AS(quadric_intersection_count(alpha, {1, 0}, {0, 1}, -1, 2),
                    std::invalid_argument);

    // reducible incidence matrix: two decoupled pair blocks
    incidence_matrix block;
    block.N = 4;
    block.a = {{0, 1, 0, 0}, {-1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, -1, 0}};
    CHECK_THROWS_AS(quadric_intersection_count(block, {1, 0}, {0, 1}, 1, 2),
                    std::invalid_argument);

    // oversized exact enumeration is refused rather than attempted
    CHECK_THROWS_AS(quadric_intersection_count(incidence_matrix::cyclic(4),
                                               {1, 0, 0}, {0, 1, 0}, 15.0, 2.0),
                    std::invalid_argument);

    CHECK_THROWS_AS(finite_field_count({}, 6, 2), std::invalid_argument);
    CHECK_THROWS_AS(finite_field_count({}, 7, 0), std::invalid_argument);
    int_polynomial q;
    q.vars = 3;
    q.add_term(1, {1, 0, 0});
    CHECK_THROWS_AS(finite_field_count({q}, 7, 2), std::invalid_argument);
}
