#include "wavekin/resonance_sum.hpp"

#include <cmath>
#include <stdexcept>

#include "wavekin/rng.hpp"
#include "wavekin/summation.hpp"

namespace wavekin {

pair_weight pair_weight::gaussian(double amp, double a1, double a2) {
    pair_weight w;
    w.radial1 = [amp, a1](double p) { return amp * std::exp(-a1 * p); };
    w.radial2 = [a2](double q) { return std::exp(-a2 * q); };
    w.eval = [amp, a1, a2](const std::vector<double>& z1,
                           const std::vector<double>& z2) {
        double p = 0, q = 0;
        for (double v : z1) p += v * v;
        for (double v : z2) q += v * v;
        return amp * std::exp(-a1 * p - a2 * q);
    };
    return w;
}

pair_weight pair_weight::product(std::function<double(double)> f1,
                                 std::function<double(double)> f2) {
    pair_weight w;
    w.radial1 = f1;
    w.radial2 = f2;
    w.eval = [f1, f2](const std::vector<double>& z1,
                      const std::vector<double>& z2) {
        double p = 0, q = 0;
        for (double v : z1) p += v * v;
        for (double v : z2) q += v * v;
        return f1(p) * f2(q);
    };
    return w;
}

pair_weight pair_weight::generic(pair_fn f) {
    pair_weight w;
    w.eval = std::move(f);
    return w;
}

namespace {

constexpr double k_tail_rel = 1e-13;       // pointwise decay-probe threshold
constexpr long long k_max_ball2 = 4000000; // cap on (box*L)^2 table size

// decay probe along a fan of directions in R^{2d}: returns the frequency-box
// radius where |Phi| <r>^{d+1} has fallen below k_tail_rel of its
// near-origin reference; throws when only polynomial-type decay is seen
double probed_box(const pair_weight& Phi, int d) {
    std::vector<std::pair<std::vector<double>, std::vector<double>>> dirs;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < d; ++i) {
        std::vector<double> u(d, 0.0), zero(d, 0.0);
        u[i] = 1.0;
        dirs.push_back({u, zero});
        dirs.push_back({zero, u});
        for (int j = 0; j < d; ++j) {
            std::vector<double> v(d, 0.0), w(d, 0.0);
            v[i] = inv_sqrt2;
            w[j] = inv_sqrt2;
            dirs.push_back({v, w});
        }
    }
    counter_rng rng{0xD1CE};
    for (int t = 0; t < 8; ++t) {
        std::vector<double> v(d), w(d);
        double n = 0;
        for (int i = 0; i < d; ++i) {
            v[i] = rng.uniform(t, i, 0) - 0.5;
            w[i] = rng.uniform(t, i, 1) - 0.5;
            n += v[i] * v[i] + w[i] * w[i];
        }
        n = std::sqrt(n);
        for (int i = 0; i < d; ++i) {
            v[i] /= n;
            w[i] /= n;
        }
        dirs.push_back({v, w});
    }

    const int r_max = 64;
    std::vector<double> t_of_r(r_max + 1, 0.0);
    std::vector<double> z1(d), z2(d);
    for (int r = 1; r <= r_max; ++r) {
        double tr = 0.0;
        for (const auto& [u, v] : dirs) {
            for (int i = 0; i < d; ++i) {
                z1[i] = r * u[i];
                z2[i] = r * v[i];
            }
            tr = std::max(tr, std::fabs(Phi(z1, z2)));
        }
        t_of_r[r] = tr * std::pow(static_cast<double>(r), d + 1);
    }
    const double t_ref = std::max({t_of_r[1], t_of_r[2], 1e-300});
    // suffix maxima make the probe robust against incidental zeros
    std::vector<double> suffix(r_max + 2, 0.0);
    for (int r = r_max; r >= 1; --r)
        suffix[r] = std::max(suffix[r + 1], t_of_r[r]);
    for (int r = 2; r <= r_max; ++r)
        if (suffix[r] <= k_tail_rel * t_ref) return static_cast<double>(r);
    throw std::domain_error(
        "resonance_sum_2: test function decays too slowly for the pair sum "
        "(no |z|^-(d+1) falloff within the probe range)");
}

// full-ball table sum: sum of E[|m|^2] over all |m|^2 <= R2i, d = 2 or 3
double ball_table_sum(const std::vector<double>& E, int d, long long R,
                      long long R2i) {
    neumaier_sum acc;
    if (d == 2) {
        for (long long x = -R; x <= R; ++x) {
            const long long rem = R2i - x * x;
            if (rem < 0) continue;
            const long long ymax =
                static_cast<long long>(std::sqrt(static_cast<double>(rem)));
            double row = 0;
            for (long long y = -ymax; y <= ymax; ++y)
                if (x * x + y * y <= R2i) row += E[x * x + y * y];
            acc.add(row);
        }
    } else {
        for (long long x = -R; x <= R; ++x)
            for (long long y = -R; y <= R; ++y) {
                const long long rem = R2i - x * x - y * y;
                if (rem < 0) continue;
                const long long zmax = static_cast<long long>(
                    std::sqrt(static_cast<double>(rem)));
                double row = 0;
                for (long long z = -zmax; z <= zmax; ++z) {
                    const long long q = x * x + y * y + z * z;
                    if (q <= R2i) row += E[q];
                }
                acc.add(row);
            }
    }
    return acc.value();
}

// separable fast path: per-site radial tables indexed by the exact integer
// squared norm, inner loops advance the quadratic form incrementally
double pair_sum_separable(const pair_weight& Phi, int d, double L, double box,
                          bool parallel, bool exclude_zeros) {
    const long long R = static_cast<long long>(std::floor(box * L));
    const long long R2i = R * R;
    if (R2i > k_max_ball2)
        throw std::invalid_argument("resonance_sum_2: box * L too large");
    const double invL2 = 1.0 / (L * L);
    std::vector<double> E1(R2i + 1), E2(R2i + 1);
    for (long long q = 0; q <= R2i; ++q) {
        E1[q] = Phi.radial1(q * invL2);
        E2[q] = Phi.radial2(q * invL2);
    }

    const std::size_t nplanes = static_cast<std::size_t>(2 * R + 1);
    double both = reduce_chunked(
        nplanes,
        [&](std::size_t ix) {
            const long long x = static_cast<long long>(ix) - R;
            neumaier_sum acc;
            if (d == 2) {
                const long long rem0 = R2i - x * x;
                if (rem0 < 0) return 0.0;
                const long long ymax = static_cast<long long>(
                    std::sqrt(static_cast<double>(rem0)));
                for (long long y = -ymax; y <= ymax; ++y) {
                    const long long p = x * x + y * y;
                    if (p == 0 || p > R2i) continue;
                    const long long g = extended_gcd(std::llabs(x), std::llabs(y)).g;
                    const long long n1 = p / (g * g);
                    const long long C = static_cast<long long>(
                        std::sqrt(static_cast<double>(R2i) / n1));
                    double inner = 0;
                    long long q = n1, dq = 3 * n1;
                    for (long long c = 1; c <= C; ++c) {
                        if (q <= R2i) inner += E2[q];
                        q += dq;
                        dq += 2 * n1;
                    }
                    acc.add(E1[p] * (2.0 * inner));
                }
            } else {
                for (long long y = -R; y <= R; ++y) {
                    const long long rem0 = R2i - x * x - y * y;
                    if (rem0 < 0) continue;
                    const long long zmax = static_cast<long long>(
                        std::sqrt(static_cast<double>(rem0)));
                    for (long long z = -zmax; z <= zmax; ++z) {
                        const long long p = x * x + y * y + z * z;
                        if (p == 0 || p > R2i) continue;
                        auto basis = orthogonal_basis(ivec{x, y, z});
                        const long long q11 = inorm2(basis[0]);
                        const long long q22 = inorm2(basis[1]);
                        const long long q12 = idot(basis[0], basis[1]);
                        const long long detG = q11 * q22 - q12 * q12;
                        const long long A = static_cast<long long>(std::sqrt(
                                                static_cast<double>(R2i) *
                                                q22 / detG)) +
                                            1;
                        double inner = 0;
                        for (long long a = -A; a <= A; ++a) {
                            const double disc =
                                static_cast<double>(q22) * R2i -
                                static_cast<double>(detG) * a * a;
                            if (disc < 0) continue;
                            const double sq = std::sqrt(disc);
                            const double bc =
                                -static_cast<double>(q12) * a / q22;
                            long long blo = static_cast<long long>(
                                std::ceil(bc - sq / q22 - 1e-9));
                            const long long bhi = static_cast<long long>(
                                std::floor(bc + sq / q22 + 1e-9));
                            long long q = q11 * a * a + 2 * q12 * a * blo +
                                          q22 * blo * blo;
                            long long dq = 2 * q12 * a + q22 * (2 * blo + 1);
                            for (long long b = blo; b <= bhi; ++b) {
                                if (q <= R2i) inner += E2[q];
                                q += dq;
                                dq += 2 * q22;
                            }
                        }
                        inner -= E2[0];  // removes the m2 = 0 term
                        acc.add(E1[p] * inner);
                    }
                }
            }
            return acc.value();
        },
        parallel, 1);

    if (!exclude_zeros) {
        // z1 = 0 with any z2, plus z2 = 0 with any nonzero z1
        const double f2 = ball_table_sum(E2, d, R, R2i);
        const double f1 = ball_table_sum(E1, d, R, R2i);
        both += Phi.radial1(0.0) * f2 + Phi.radial2(0.0) * (f1 - E1[0]);
    }
    return both;
}

// generic path: same enumeration, direct evaluation of Phi at each pair
double pair_sum_generic(const pair_weight& Phi, int d, double L, double box,
                        bool parallel, bool exclude_zeros) {
    const long long R = static_cast<long long>(std::floor(box * L));
    const long long R2i = R * R;
    const double invL = 1.0 / L;
    const std::size_t nplanes = static_cast<std::size_t>(2 * R + 1);

    double both = reduce_chunked(
        nplanes,
        [&](std::size_t ix) {
            const long long x = static_cast<long long>(ix) - R;
            std::vector<double> z1(d), z2(d);
            ivec m1(d);
            neumaier_sum acc;
            // walks the orthogonal sublattice through its reduced basis with
            // exact ball intervals per coefficient; the running norm q stays
            // in integer arithmetic, and q == 0 marks exactly the m2 = 0 term
            auto inner_sum2 = [&](const ivec& m) {
                for (int t = 0; t < 2; ++t) z1[t] = m[t] * invL;
                const auto basis = orthogonal_basis(m);
                const ivec& K = basis[0];
                const long long k2 = inorm2(K);
                long long cmax =
                    static_cast<long long>(std::sqrt(
                        static_cast<double>(R2i) / static_cast<double>(k2)));
                while ((cmax + 1) * (cmax + 1) * k2 <= R2i) ++cmax;
                while (cmax > 0 && cmax * cmax * k2 > R2i) --cmax;
                double inner = 0;
                for (long long c = -cmax; c <= cmax; ++c) {
                    if (c == 0) continue;
                    z2[0] = c * K[0] * invL;
                    z2[1] = c * K[1] * invL;
                    inner += Phi(z1, z2);
                }
                return inner;
            };
            auto inner_sum3 = [&](const ivec& m) {
                for (int t = 0; t < 3; ++t) z1[t] = m[t] * invL;
                const auto basis = orthogonal_basis(m);
                const ivec& b1 = basis[0];
                const ivec& b2 = basis[1];
                const long long q11 = inorm2(b1), q22 = inorm2(b2);
                const long long q12 = idot(b1, b2);
                const long long detG = q11 * q22 - q12 * q12;
                const long long A = static_cast<long long>(std::sqrt(
                                        static_cast<double>(R2i) * q22 /
                                        detG)) +
                                    1;
                double inner = 0;
                for (long long a = -A; a <= A; ++a) {
                    const double disc = static_cast<double>(q22) * R2i -
                                        static_cast<double>(detG) * a * a;
                    if (disc < 0) continue;
                    const double sq = std::sqrt(disc);
                    const double bc = -static_cast<double>(q12) * a / q22;
                    const long long blo = static_cast<long long>(
                        std::ceil(bc - sq / q22 - 1e-9));
                    const long long bhi = static_cast<long long>(
                        std::floor(bc + sq / q22 + 1e-9));
                    long long q = q11 * a * a + 2 * q12 * a * blo +
                                  q22 * blo * blo;
                    long long dq = 2 * q12 * a + q22 * (2 * blo + 1);
                    long long w0 = a * b1[0] + blo * b2[0];
                    long long w1 = a * b1[1] + blo * b2[1];
                    long long w2 = a * b1[2] + blo * b2[2];
                    for (long long b = blo; b <= bhi; ++b) {
                        if (q != 0 && q <= R2i) {
                            z2[0] = w0 * invL;
                            z2[1] = w1 * invL;
                            z2[2] = w2 * invL;
                            inner += Phi(z1, z2);
                        }
                        q += dq;
                        dq += 2 * q22;
                        w0 += b2[0];
                        w1 += b2[1];
                        w2 += b2[2];
                    }
                }
                return inner;
            };
            if (d == 2) {
                for (long long y = -R; y <= R; ++y) {
                    m1 = {x, y};
                    const long long p = inorm2(m1);
                    if (p == 0 || p > R2i) continue;
                    acc.add(inner_sum2(m1));
                }
            } else {
                for (long long y = -R; y <= R; ++y)
                    for (long long z = -R; z <= R; ++z) {
                        m1 = {x, y, z};
                        const long long p = inorm2(m1);
                        if (p == 0 || p > R2i) continue;
                        acc.add(inner_sum3(m1));
                    }
            }
            return acc.value();
        },
        parallel, 1);

    if (!exclude_zeros) {
        neumaier_sum zero_part;
        std::vector<double> z1(d, 0.0), z2(d);
        ivec m(d, -R);
        for (;;) {
            if (inorm2(m) <= R2i) {
                for (int t = 0; t < d; ++t) z2[t] = m[t] * invL;
                zero_part.add(Phi(z1, z2));          // z1 = 0 branch
                if (!is_zero_vec(m)) zero_part.add(Phi(z2, z1));  // z2 = 0
            }
            int axis = 0;
            while (axis < d && ++m[axis] > R) {
                m[axis] = -R;
                ++axis;
            }
            if (axis == d) break;
        }
        both += zero_part.value();
    }
    return both;
}

}  // namespace

double resonance_sum_2(const pair_weight& Phi, int d, double L,
                       const resonance_sum_options& opts) {
    if (d < 2) throw std::invalid_argument("resonance_sum_2: d must be >= 2");
    if (!(L >= 2.0)) throw std::invalid_argument("resonance_sum_2: L must be >= 2");
    if (!Phi.eval) throw std::invalid_argument("resonance_sum_2: missing evaluator");
    const double box = opts.box > 0.0 ? opts.box : probed_box(Phi, d);

    double sum;
    if (Phi.separable())
        sum = pair_sum_separable(Phi, d, L, box, opts.parallel,
                                 opts.exclude_zeros);
    else
        sum = pair_sum_generic(Phi, d, L, box, opts.parallel,
                               opts.exclude_zeros);

    double norm = std::pow(L, 2.0 * (1 - d));
    if (d == 2 && opts.d2_lognorm) norm /= std::log(L);
    return sum * norm;
}

// ====================== N-fold sums =========================================

namespace {

struct tuple_scratch {
    std::vector<ivec> z;                   // N blocks of d integers
    std::vector<ivec> az;                  // (alpha z)_j
    std::vector<std::vector<double>> zs;   // frequency-space copy
};

// final admissibility gate: z_j != 0, inside the ball, (alpha z)_j != 0,
// omega_j = 0; evaluates Phi when everything passes
bool check_and_eval(const incidence_matrix& alpha, int d, long long R2i,
                    const tuple_fn& Phi, double L, tuple_scratch& ts,
                    double& out) {
    const int N = alpha.N;
    for (int j = 0; j < N; ++j) {
        const ivec& zj = ts.z[j];
        long long n2 = 0;
        for (int t = 0; t < d; ++t) n2 += zj[t] * zj[t];
        if (n2 == 0 || n2 > R2i) return false;
    }
    for (int j = 0; j < N; ++j) {
        ivec& aj = ts.az[j];
        std::fill(aj.begin(), aj.end(), 0);
        for (int i = 0; i < N; ++i) {
            const int e = alpha.a[j][i];
            if (e == 0) continue;
            for (int t = 0; t < d; ++t) aj[t] += e * ts.z[i][t];
        }
        long long dotv = 0, an2 = 0;
        for (int t = 0; t < d; ++t) {
            dotv += ts.z[j][t] * aj[t];
            an2 += aj[t] * aj[t];
        }
        if (an2 == 0 || dotv != 0) return false;
    }
    const double invL = 1.0 / L;
    for (int j = 0; j < N; ++j)
        for (int t = 0; t < d; ++t) ts.zs[j][t] = ts.z[j][t] * invL;
    out = Phi(ts.zs);
    return true;
}

tuple_scratch make_scratch(int N, int d) {
    tuple_scratch ts;
    ts.z.assign(N, ivec(d, 0));
    ts.az.assign(N, ivec(d, 0));
    ts.zs.assign(N, std::vector<double>(d, 0.0));
    return ts;
}

// visits every nonzero lattice vector in the ball with first coordinate x
template <class Visit>
void plane_ball_walk(int d, long long x, long long R, long long R2i,
                     Visit&& visit) {
    ivec m(d);
    m[0] = x;
    if (d == 2) {
        const long long rem = R2i - x * x;
        if (rem < 0) return;
        const long long ymax =
            static_cast<long long>(std::sqrt(static_cast<double>(rem)));
        for (long long y = -ymax; y <= ymax; ++y) {
            if (x == 0 && y == 0) continue;
            if (x * x + y * y > R2i) continue;
            m[1] = y;
            visit(m);
        }
    } else {
        for (long long y = -R; y <= R; ++y) {
            const long long rem = R2i - x * x - y * y;
            if (rem < 0) continue;
            m[1] = y;
            const long long zmax =
                static_cast<long long>(std::sqrt(static_cast<double>(rem)));
            for (long long z = -zmax; z <= zmax; ++z) {
                if (x == 0 && y == 0 && z == 0) continue;
                if (x * x + y * y + z * z > R2i) continue;
                m[2] = z;
                visit(m);
            }
        }
    }
}

template <class Visit>
void ball_walk(int d, long long R, long long R2i, Visit&& visit) {
    for (long long x = -R; x <= R; ++x) plane_ball_walk(d, x, R, R2i, visit);
}

// integer points of (a,b) . x = c with |x|_inf <= M, d = 2 only
template <class Emit>
void line_solutions_2d(long long a, long long b, long long c, long long M,
                       Emit&& emit) {
    const auto [g, xg, yg] = extended_gcd(a, b);
    if (g == 0 || c % g != 0) return;
    const long long px = xg * (c / g), py = yg * (c / g);
    const long long kx = -b / g, ky = a / g;
    double lo = -1e18, hi = 1e18;
    if (kx != 0) {
        double t1 = (-(double)M - px) / kx, t2 = ((double)M - px) / kx;
        if (t1 > t2) std::swap(t1, t2);
        lo = std::max(lo, t1);
        hi = std::min(hi, t2);
    } else if (std::llabs(px) > M) {
        return;
    }
    if (ky != 0) {
        double t1 = (-(double)M - py) / ky, t2 = ((double)M - py) / ky;
        if (t1 > t2) std::swap(t1, t2);
        lo = std::max(lo, t1);
        hi = std::min(hi, t2);
    } else if (std::llabs(py) > M) {
        return;
    }
    const long long tlo = static_cast<long long>(std::ceil(lo - 1e-9));
    const long long thi = static_cast<long long>(std::floor(hi + 1e-9));
    for (long long t = tlo; t <= thi; ++t) {
        const long long sx = px + t * kx, sy = py + t * ky;
        if (std::llabs(sx) <= M && std::llabs(sy) <= M) emit(sx, sy);
    }
}

struct nsum_accum {
    neumaier_sum value;
    double count = 0;
};

// solve the remaining linear system for the last variable and emit every
// in-box solution; rows may be rank-deficient or inconsistent
void solve_and_emit(const incidence_matrix& alpha, int d, long long R,
                    long long R2i, const tuple_fn& Phi, double L,
                    const std::vector<ivec>& rows, const ivec& rhs,
                    int target_index, tuple_scratch& ts, nsum_accum& acc) {
    const auto sol = solve_integer_linear(rows, rhs);
    if (!sol.has_value()) return;
    for_each_affine_box(sol->particular, sol->kernel, R, [&](const ivec& m) {
        ts.z[target_index] = m;
        double val;
        if (check_and_eval(alpha, d, R2i, Phi, L, ts, val)) {
            acc.value.add(val);
            acc.count += 1;
        }
    });
}

}  // namespace

nsum_result resonance_sum_N_info(const tuple_fn& Phi,
                                 const incidence_matrix& alpha, int d,
                                 double L, double box,
                                 const resonance_sum_options& opts) {
    alpha.validate();
    const int N = alpha.N;
    if (N < 2 || N > 4)
        throw std::invalid_argument("resonance_sum_N: N must be 2, 3 or 4");
    if (alpha.has_zero_row())
        throw std::domain_error("resonance_sum_N: empty admissible set Z");
    if (d < 2) throw std::invalid_argument("resonance_sum_N: d must be >= 2");
    if (!(L >= 2.0))
        throw std::invalid_argument("resonance_sum_N: L must be >= 2");
    if (!(box > 0.0))
        throw std::invalid_argument("resonance_sum_N: box must be positive");

    const long long R = static_cast<long long>(std::floor(box * L));
    const long long R2i = R * R;
    const std::size_t nplanes = static_cast<std::size_t>(2 * R + 1);

    const auto comps = alpha.support_components();

    // the plane-parallel reduction: emit(ix, acc) fills acc[0] += values,
    // acc[1] += admissible count for the plane x = ix - R of the outer var
    auto run_planes = [&](auto&& plane_body) {
        auto totals = reduce_chunked_vec(
            nplanes, 2,
            [&](std::size_t ix, std::vector<neumaier_sum>& chunk_acc) {
                nsum_accum acc;
                plane_body(static_cast<long long>(ix) - R, acc);
                chunk_acc[0].add(acc.value.value());
                chunk_acc[1].add(acc.count);
            },
            opts.parallel, 1);
        return totals;
    };

    std::vector<double> totals(2, 0.0);

    if (comps.size() > 1) {
        // reducible: components are pairs (singletons would be zero rows).
        // materialize the trailing components once, stream the first
        std::vector<std::vector<std::pair<ivec, ivec>>> tail_lists;
        for (std::size_t ci = 1; ci < comps.size(); ++ci) {
            std::vector<std::pair<ivec, ivec>> list;
            for (long long x = -R; x <= R; ++x)
                plane_ball_walk(d, x, R, R2i, [&](const ivec& m1) {
                    const auto basis = orthogonal_basis(m1);
                    for_each_affine_box(
                        ivec(d, 0), basis, R, [&](const ivec& m2) {
                            if (is_zero_vec(m2) || inorm2(m2) > R2i) return;
                            list.emplace_back(m1, m2);
                        });
                });
            tail_lists.push_back(std::move(list));
        }
        totals = run_planes([&](long long x, nsum_accum& acc) {
            tuple_scratch ts = make_scratch(N, d);
            plane_ball_walk(d, x, R, R2i, [&](const ivec& m1) {
                const auto basis = orthogonal_basis(m1);
                for_each_affine_box(ivec(d, 0), basis, R, [&](const ivec& m2) {
                    if (is_zero_vec(m2) || inorm2(m2) > R2i) return;
                    ts.z[comps[0][0]] = m1;
                    ts.z[comps[0][1]] = m2;
                    // nested walk over the cartesian product of tail lists
                    std::function<void(std::size_t)> rec = [&](std::size_t ci) {
                        if (ci == tail_lists.size()) {
                            double val;
                            if (check_and_eval(alpha, d, R2i, Phi, L, ts, val)) {
                                acc.value.add(val);
                                acc.count += 1;
                            }
                            return;
                        }
                        for (const auto& [a, b] : tail_lists[ci]) {
                            ts.z[comps[ci + 1][0]] = a;
                            ts.z[comps[ci + 1][1]] = b;
                            rec(ci + 1);
                        }
                    };
                    rec(0);
                });
            });
        });
    } else if (N == 2) {
        totals = run_planes([&](long long x, nsum_accum& acc) {
            tuple_scratch ts = make_scratch(N, d);
            plane_ball_walk(d, x, R, R2i, [&](const ivec& m1) {
                const auto basis = orthogonal_basis(m1);
                for_each_affine_box(ivec(d, 0), basis, R, [&](const ivec& m2) {
                    if (is_zero_vec(m2) || inorm2(m2) > R2i) return;
                    ts.z[0] = m1;
                    ts.z[1] = m2;
                    double val;
                    if (check_and_eval(alpha, d, R2i, Phi, L, ts, val)) {
                        acc.value.add(val);
                        acc.count += 1;
                    }
                });
            });
        });
    } else if (N == 3) {
        // loop (z1, z2), solve the remaining linear system for z3
        const int a12 = alpha.a[0][1], a13 = alpha.a[0][2];
        const int a23 = alpha.a[1][2];
        const int a31 = alpha.a[2][0], a32 = alpha.a[2][1];
        if (d == 2) {
            // inline 2x2 Cramer / line walk; candidates are a superset and
            // check_and_eval is the exact gate
            totals = run_planes([&](long long x, nsum_accum& acc) {
                tuple_scratch ts = make_scratch(N, d);
                auto candidate = [&](long long zx, long long zy) {
                    ts.z[2][0] = zx;
                    ts.z[2][1] = zy;
                    double val;
                    if (check_and_eval(alpha, d, R2i, Phi, L, ts, val)) {
                        acc.value.add(val);
                        acc.count += 1;
                    }
                };
                plane_ball_walk(d, x, R, R2i, [&](const ivec& m1) {
                    ts.z[0] = m1;
                    ball_walk(d, R, R2i, [&](const ivec& m2) {
                        ts.z[1] = m2;
                        const long long t12 =
                            m1[0] * m2[0] + m1[1] * m2[1];
                        long long ax[3], ay[3], rc[3];
                        int n = 0;
                        if (a13 != 0) {
                            ax[n] = a13 * m1[0];
                            ay[n] = a13 * m1[1];
                            rc[n] = -static_cast<long long>(a12) * t12;
                            ++n;
                        } else if (a12 != 0 && t12 != 0) {
                            return;
                        }
                        if (a23 != 0) {
                            ax[n] = a23 * m2[0];
                            ay[n] = a23 * m2[1];
                            rc[n] = static_cast<long long>(a12) * t12;
                            ++n;
                        } else if (a12 != 0 && t12 != 0) {
                            return;
                        }
                        const long long cx = static_cast<long long>(a31) * m1[0] +
                                             static_cast<long long>(a32) * m2[0];
                        const long long cy = static_cast<long long>(a31) * m1[1] +
                                             static_cast<long long>(a32) * m2[1];
                        if (cx != 0 || cy != 0) {
                            ax[n] = cx;
                            ay[n] = cy;
                            rc[n] = 0;
                            ++n;
                        }
                        if (n == 0) return;
                        long long det = 0;
                        int i0 = -1, i1 = -1;
                        for (int i = 0; i < n && i0 < 0; ++i)
                            for (int j = i + 1; j < n; ++j) {
                                const long long dd =
                                    ax[i] * ay[j] - ay[i] * ax[j];
                                if (dd != 0) {
                                    det = dd;
                                    i0 = i;
                                    i1 = j;
                                    break;
                                }
                            }
                        if (i0 >= 0) {
                            const long long nx =
                                rc[i0] * ay[i1] - rc[i1] * ay[i0];
                            const long long ny =
                                ax[i0] * rc[i1] - ax[i1] * rc[i0];
                            if (nx % det == 0 && ny % det == 0)
                                candidate(nx / det, ny / det);
                        } else {
                            line_solutions_2d(ax[0], ay[0], rc[0], R,
                                              candidate);
                        }
                    });
                });
            });
        } else {
            totals = run_planes([&](long long x, nsum_accum& acc) {
                tuple_scratch ts = make_scratch(N, d);
                std::vector<ivec> rows(3, ivec(d));
                ivec rhs(3);
                plane_ball_walk(d, x, R, R2i, [&](const ivec& m1) {
                    ts.z[0] = m1;
                    ball_walk(d, R, R2i, [&](const ivec& m2) {
                        ts.z[1] = m2;
                        const long long t12 = idot(m1, m2);
                        for (int t = 0; t < d; ++t) {
                            rows[0][t] = a13 * m1[t];
                            rows[1][t] = a23 * m2[t];
                            rows[2][t] = a31 * m1[t] + a32 * m2[t];
                        }
                        rhs[0] = -a12 * t12;
                        rhs[1] = a12 * t12;  // a21 = -a12
                        rhs[2] = 0;
                        solve_and_emit(alpha, d, R, R2i, Phi, L, rows, rhs, 2,
                                       ts, acc);
                    });
                });
            });
        }
    } else {
        // N = 4: prefer a bipartition {i,k} | {j,l} with alpha_ik = alpha_jl
        // = 0, which decouples z_j and z_l into perpendicular sublattices
        int bi = -1, bk = -1, bj = -1, bl = -1;
        const int splits[3][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}};
        for (const auto& s : splits) {
            if (alpha.a[s[0]][s[1]] == 0 && alpha.a[s[2]][s[3]] == 0) {
                bi = s[0];
                bk = s[1];
                bj = s[2];
                bl = s[3];
                break;
            }
        }
        if (bi >= 0 && d == 2) {
            // perpendicular lines are one-dimensional: z_j = c p_j with p_j
            // the primitive perp of A_j = (alpha z)_j, and the two leftover
            // omega constraints become a 2x2 homogeneous system in (c, c')
            const int aji = alpha.a[bj][bi], ajk = alpha.a[bj][bk];
            const int ali = alpha.a[bl][bi], alk = alpha.a[bl][bk];
            const int aij = alpha.a[bi][bj], ail = alpha.a[bi][bl];
            const int akj = alpha.a[bk][bj], akl = alpha.a[bk][bl];
            totals = run_planes([&](long long x, nsum_accum& acc) {
                tuple_scratch ts = make_scratch(N, d);
                plane_ball_walk(d, x, R, R2i, [&](const ivec& mi) {
                    ts.z[bi] = mi;
                    ball_walk(d, R, R2i, [&](const ivec& mk) {
                        ts.z[bk] = mk;
                        const long long Ajx = static_cast<long long>(aji) * mi[0] +
                                              static_cast<long long>(ajk) * mk[0];
                        const long long Ajy = static_cast<long long>(aji) * mi[1] +
                                              static_cast<long long>(ajk) * mk[1];
                        const long long Alx = static_cast<long long>(ali) * mi[0] +
                                              static_cast<long long>(alk) * mk[0];
                        const long long Aly = static_cast<long long>(ali) * mi[1] +
                                              static_cast<long long>(alk) * mk[1];
                        if ((Ajx == 0 && Ajy == 0) || (Alx == 0 && Aly == 0))
                            return;
                        const long long gj =
                            extended_gcd(std::llabs(Ajx), std::llabs(Ajy)).g;
                        const long long gl =
                            extended_gcd(std::llabs(Alx), std::llabs(Aly)).g;
                        const long long pjx = -Ajy / gj, pjy = Ajx / gj;
                        const long long plx = -Aly / gl, ply = Alx / gl;
                        const long long nj2 = pjx * pjx + pjy * pjy;
                        const long long nl2 = plx * plx + ply * ply;
                        const long long Cj = static_cast<long long>(
                            std::sqrt(static_cast<double>(R2i) / nj2));
                        const long long Cl = static_cast<long long>(
                            std::sqrt(static_cast<double>(R2i) / nl2));
                        auto emit_pair = [&](long long cj, long long cl) {
                            ts.z[bj][0] = cj * pjx;
                            ts.z[bj][1] = cj * pjy;
                            ts.z[bl][0] = cl * plx;
                            ts.z[bl][1] = cl * ply;
                            double val;
                            if (check_and_eval(alpha, d, R2i, Phi, L, ts,
                                               val)) {
                                acc.value.add(val);
                                acc.count += 1;
                            }
                        };
                        const long long u1 = aij * (mi[0] * pjx + mi[1] * pjy);
                        const long long v1 = ail * (mi[0] * plx + mi[1] * ply);
                        const long long u2 = akj * (mk[0] * pjx + mk[1] * pjy);
                        const long long v2 = akl * (mk[0] * plx + mk[1] * ply);
                        if (u1 * v2 - v1 * u2 != 0) return;  // only (0,0)
                        if (u1 == 0 && v1 == 0 && u2 == 0 && v2 == 0) {
                            for (long long cj = -Cj; cj <= Cj; ++cj) {
                                if (cj == 0) continue;
                                for (long long cl = -Cl; cl <= Cl; ++cl) {
                                    if (cl == 0) continue;
                                    emit_pair(cj, cl);
                                }
                            }
                            return;
                        }
                        long long u = u1, v = v1;
                        if (u == 0 && v == 0) {
                            u = u2;
                            v = v2;
                        }
                        const long long kg =
                            extended_gcd(std::llabs(u), std::llabs(v)).g;
                        const long long kcj = -v / kg, kcl = u / kg;
                        long long T = (1LL << 62);
                        if (kcj != 0) T = std::min(T, Cj / std::llabs(kcj));
                        if (kcl != 0) T = std::min(T, Cl / std::llabs(kcl));
                        for (long long t = -T; t <= T; ++t) {
                            if (t == 0) continue;
                            emit_pair(t * kcj, t * kcl);
                        }
                    });
                });
            });
        } else if (bi >= 0) {
            // d = 3: walk both perpendicular sublattices directly and let
            // the exact gate filter the leftover omega constraints
            const int aji = alpha.a[bj][bi], ajk = alpha.a[bj][bk];
            const int ali = alpha.a[bl][bi], alk = alpha.a[bl][bk];
            totals = run_planes([&](long long x, nsum_accum& acc) {
                tuple_scratch ts = make_scratch(N, d);
                ivec Aj(d), Al(d);
                plane_ball_walk(d, x, R, R2i, [&](const ivec& mi) {
                    ts.z[bi] = mi;
                    ball_walk(d, R, R2i, [&](const ivec& mk) {
                        ts.z[bk] = mk;
                        for (int t = 0; t < d; ++t) {
                            Aj[t] = aji * mi[t] + ajk * mk[t];
                            Al[t] = ali * mi[t] + alk * mk[t];
                        }
                        if (is_zero_vec(Aj) || is_zero_vec(Al)) return;
                        const auto Bj = orthogonal_basis(Aj);
                        const auto Bl = orthogonal_basis(Al);
                        for_each_affine_box(
                            ivec(d, 0), Bj, R, [&](const ivec& zj) {
                                if (is_zero_vec(zj) || inorm2(zj) > R2i)
                                    return;
                                ts.z[bj] = zj;
                                for_each_affine_box(
                                    ivec(d, 0), Bl, R, [&](const ivec& zl) {
                                        if (is_zero_vec(zl) ||
                                            inorm2(zl) > R2i)
                                            return;
                                        ts.z[bl] = zl;
                                        double val;
                                        if (check_and_eval(alpha, d, R2i, Phi,
                                                           L, ts, val)) {
                                            acc.value.add(val);
                                            acc.count += 1;
                                        }
                                    });
                            });
                    });
                });
            });
        } else {
            // non-bipartite: triple loop with a linear solve for z4
            totals = run_planes([&](long long x, nsum_accum& acc) {
                tuple_scratch ts = make_scratch(N, d);
                std::vector<ivec> rows(4, ivec(d));
                ivec rhs(4);
                plane_ball_walk(d, x, R, R2i, [&](const ivec& m1) {
                    ts.z[0] = m1;
                    ball_walk(d, R, R2i, [&](const ivec& m2) {
                        ts.z[1] = m2;
                        ball_walk(d, R, R2i, [&](const ivec& m3) {
                            ts.z[2] = m3;
                            for (int t = 0; t < d; ++t) {
                                rows[0][t] = alpha.a[0][3] * m1[t];
                                rows[1][t] = alpha.a[1][3] * m2[t];
                                rows[2][t] = alpha.a[2][3] * m3[t];
                                rows[3][t] = alpha.a[3][0] * m1[t] +
                                             alpha.a[3][1] * m2[t] +
                                             alpha.a[3][2] * m3[t];
                            }
                            rhs[0] = -(alpha.a[0][1] * idot(m1, m2) +
                                       alpha.a[0][2] * idot(m1, m3));
                            rhs[1] = -(alpha.a[1][0] * idot(m2, m1) +
                                       alpha.a[1][2] * idot(m2, m3));
                            rhs[2] = -(alpha.a[2][0] * idot(m3, m1) +
                                       alpha.a[2][1] * idot(m3, m2));
                            rhs[3] = 0;
                            solve_and_emit(alpha, d, R, R2i, Phi, L, rows, rhs,
                                           3, ts, acc);
                        });
                    });
                });
            });
        }
    }

    nsum_result res;
    double norm = std::pow(L, N * (1.0 - d));
    if (d == 2 && opts.d2_lognorm) norm *= std::pow(std::log(L), -N / 2.0);
    res.value = totals[0] * norm;
    res.admissible_points = static_cast<unsigned long long>(totals[1]);

    // crude tail estimate: largest |Phi| on random boundary-shell tuples,
    // times the number of admissible points found
    counter_rng rng{0xA11};
    double tmax = 0.0;
    std::vector<std::vector<double>> zs(N, std::vector<double>(d));
    for (int trial = 0; trial < 256; ++trial) {
        for (int j = 0; j < N; ++j) {
            double n = 0;
            for (int t = 0; t < d; ++t) {
                zs[j][t] = rng.uniform(trial, j, t) - 0.5;
                n += zs[j][t] * zs[j][t];
            }
            const double r =
                box * (0.92 + 0.08 * rng.uniform(trial, j, 100));
            for (int t = 0; t < d; ++t) zs[j][t] *= r / std::sqrt(n);
        }
        tmax = std::max(tmax, std::fabs(Phi(zs)));
    }
    res.tail_bound = tmax * norm * (totals[1] + 1.0);
    return res;
}

double resonance_sum_N(const tuple_fn& Phi, const incidence_matrix& alpha,
                       int d, double L, double box,
                       const resonance_sum_options& opts) {
    return resonance_sum_N_info(Phi, alpha, d, L, box, opts).value;
}

}  // namespace wavekin
