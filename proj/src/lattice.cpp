#include "wavekin/lattice.hpp"

#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace wavekin {

long long idot(const ivec& a, const ivec& b) {
    long long s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

long long inorm2(const ivec& m) { return idot(m, m); }

long long inorm_inf(const ivec& m) {
    long long s = 0;
    for (long long x : m) s = std::max(s, std::llabs(x));
    return s;
}

bool is_zero_vec(const ivec& m) {
    for (long long x : m)
        if (x != 0) return false;
    return true;
}

std::vector<double> int_site::s() const {
    std::vector<double> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        out[i] = static_cast<double>(m[i]) / L;
    return out;
}

egcd_result extended_gcd(long long a, long long b) {
    long long old_r = a, r = b;
    long long old_s = 1, s = 0;
    long long old_t = 0, t = 1;
    while (r != 0) {
        const long long q = old_r / r;
        long long tmp = old_r - q * r;
        old_r = r;
        r = tmp;
        tmp = old_s - q * s;
        old_s = s;
        s = tmp;
        tmp = old_t - q * t;
        old_t = t;
        t = tmp;
    }
    if (old_r < 0) {
        old_r = -old_r;
        old_s = -old_s;
        old_t = -old_t;
    }
    return {old_r, old_s, old_t};
}

std::vector<ivec> orthogonal_basis(const ivec& m) {
    if (is_zero_vec(m))
        throw std::invalid_argument(
            "orthogonal_basis: m = 0 has the full lattice as complement");
    const std::size_t d = m.size();
    if (d == 2) {
        // convention (-b, a) / gcd, so coprime (a,b) gives exactly (-b, a)
        const long long g = extended_gcd(m[0], m[1]).g;
        return {{-m[1] / g, m[0] / g}};
    }
    // column reduction: maintain columns u_j with scalars v_j = m . u_j and
    // fold each v_j into v_0 by unimodular 2-column moves
    std::vector<ivec> u(d, ivec(d, 0));
    for (std::size_t j = 0; j < d; ++j) u[j][j] = 1;
    ivec v = m;
    for (std::size_t j = 1; j < d; ++j) {
        if (v[j] == 0) continue;
        if (v[0] == 0) {
            std::swap(u[0], u[j]);
            std::swap(v[0], v[j]);
            continue;
        }
        const auto [g, x, y] = extended_gcd(v[0], v[j]);
        const long long p = v[0] / g, q = v[j] / g;
        ivec c0(d), cj(d);
        for (std::size_t k = 0; k < d; ++k) {
            c0[k] = x * u[0][k] + y * u[j][k];
            cj[k] = -q * u[0][k] + p * u[j][k];
        }
        u[0] = c0;
        u[j] = cj;
        v[0] = g;
        v[j] = 0;
    }
    std::vector<ivec> basis(u.begin() + 1, u.end());
    if (basis.size() == 2) lagrange_reduce(basis[0], basis[1]);
    return basis;
}

void lagrange_reduce(ivec& b1, ivec& b2) {
    for (int guard = 0; guard < 64; ++guard) {
        if (inorm2(b1) > inorm2(b2)) std::swap(b1, b2);
        const long long n1 = inorm2(b1);
        if (n1 == 0) return;
        const long long num = idot(b1, b2);
        // nearest integer of num / n1
        const long long t =
            (2 * num + (num >= 0 ? n1 : -n1)) / (2 * n1);
        if (t == 0) return;
        for (std::size_t k = 0; k < b1.size(); ++k) b2[k] -= t * b1[k];
    }
}

std::vector<ivec> enumerate_orthogonal(const ivec& m, long long M) {
    if (is_zero_vec(m))
        throw std::invalid_argument("enumerate_orthogonal: m must be nonzero");
    std::vector<ivec> out;
    if (M <= 0) return out;
    const auto basis = orthogonal_basis(m);
    for_each_affine_box(ivec(m.size(), 0), basis, M, [&](const ivec& x) {
        if (!is_zero_vec(x)) out.push_back(x);
    });
    return out;
}

long long count_resonant_pairs(int d, long long M) {
    if (M <= 0) return 0;
    // walk m1 over the box; count orthogonal partners through the basis
    long long count = 0;
    ivec m1(d, -M);
    for (;;) {
        if (!is_zero_vec(m1)) {
            const auto basis = orthogonal_basis(m1);
            for_each_affine_box(ivec(d, 0), basis, M, [&](const ivec& x) {
                if (!is_zero_vec(x)) ++count;
            });
        }
        int axis = 0;
        while (axis < d && ++m1[axis] > M) {
            m1[axis] = -M;
            ++axis;
        }
        if (axis == d) break;
    }
    return count;
}

std::vector<ivec> enumerate_affine_box(const ivec& P,
                                       const std::vector<ivec>& kernel,
                                       long long M) {
    std::vector<ivec> out;
    for_each_affine_box(P, kernel, M, [&](const ivec& x) { out.push_back(x); });
    return out;
}

std::optional<integer_affine_set> solve_integer_linear(
    const std::vector<ivec>& rows, const ivec& rhs) {
    if (rows.empty()) throw std::invalid_argument("solve_integer_linear: no rows");
    const std::size_t k = rows.size();
    const std::size_t d = rows[0].size();

    // column-style Hermite reduction: W = rows * U with U unimodular
    std::vector<ivec> W = rows;
    std::vector<ivec> U(d, ivec(d, 0));
    for (std::size_t j = 0; j < d; ++j) U[j][j] = 1;

    auto combine_cols = [&](std::size_t c0, std::size_t cj, long long x,
                            long long y, long long p, long long q) {
        // (col c0, col cj) <- (x*c0 + y*cj, -q*c0 + p*cj), det = xp + yq = 1
        for (std::size_t i = 0; i < k; ++i) {
            const long long a = W[i][c0], b = W[i][cj];
            W[i][c0] = x * a + y * b;
            W[i][cj] = -q * a + p * b;
        }
        for (std::size_t i = 0; i < d; ++i) {
            const long long a = U[c0][i], b = U[cj][i];
            U[c0][i] = x * a + y * b;
            U[cj][i] = -q * a + p * b;
        }
    };

    std::vector<std::pair<std::size_t, std::size_t>> pivots;  // (row, col)
    std::size_t pc = 0;
    for (std::size_t i = 0; i < k && pc < d; ++i) {
        for (std::size_t j = pc + 1; j < d; ++j) {
            if (W[i][j] == 0) continue;
            if (W[i][pc] == 0) {
                std::swap(U[pc], U[j]);
                for (std::size_t r = 0; r < k; ++r) std::swap(W[r][pc], W[r][j]);
                continue;
            }
            const auto [g, x, y] = extended_gcd(W[i][pc], W[i][j]);
            combine_cols(pc, j, x, y, W[i][pc] / g, W[i][j] / g);
        }
        if (W[i][pc] != 0) {
            pivots.emplace_back(i, pc);
            ++pc;
        }
    }

    // forward solve on pivot columns with exact divisibility
    ivec y(d, 0);
    for (const auto& [pi, pcol] : pivots) {
        long long r = rhs[pi];
        for (const auto& [qi, qcol] : pivots) {
            if (qcol >= pcol) break;
            r -= W[pi][qcol] * y[qcol];
        }
        if (r % W[pi][pcol] != 0) return std::nullopt;
        y[pcol] = r / W[pi][pcol];
    }
    // consistency of every row, including dependent ones
    for (std::size_t i = 0; i < k; ++i) {
        long long acc = 0;
        for (std::size_t j = 0; j < d; ++j) acc += W[i][j] * y[j];
        if (acc != rhs[i]) return std::nullopt;
    }

    integer_affine_set out;
    out.particular.assign(d, 0);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < d; ++i)
            out.particular[i] += y[j] * U[j][i];
    std::vector<bool> is_pivot(d, false);
    for (const auto& [pi, pcol] : pivots) is_pivot[pcol] = true;
    for (std::size_t j = 0; j < d; ++j)
        if (!is_pivot[j]) out.kernel.push_back(U[j]);
    if (out.kernel.size() == 2) lagrange_reduce(out.kernel[0], out.kernel[1]);
    return out;
}

void incidence_matrix::validate() const {
    if (N < 2) throw std::invalid_argument("incidence_matrix: N must be >= 2");
    if (static_cast<int>(a.size()) != N)
        throw std::invalid_argument("incidence_matrix: row count mismatch");
    for (int i = 0; i < N; ++i) {
        if (static_cast<int>(a[i].size()) != N)
            throw std::invalid_argument("incidence_matrix: column count mismatch");
        for (int j = 0; j < N; ++j) {
            if (a[i][j] < -1 || a[i][j] > 1)
                throw std::invalid_argument(
                    "incidence_matrix: entries must lie in {-1,0,1}");
            if (a[i][j] != -a[j][i])
                throw std::invalid_argument(
                    "incidence_matrix: matrix must be skew-symmetric");
        }
    }
}

bool incidence_matrix::has_zero_row() const {
    for (int i = 0; i < N; ++i) {
        bool nonzero = false;
        for (int j = 0; j < N; ++j) nonzero = nonzero || (a[i][j] != 0);
        if (!nonzero) return true;
    }
    return false;
}

std::vector<std::vector<int>> incidence_matrix::support_components() const {
    std::vector<int> comp(N, -1);
    int ncomp = 0;
    for (int start = 0; start < N; ++start) {
        if (comp[start] != -1) continue;
        std::vector<int> stack{start};
        comp[start] = ncomp;
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            for (int j = 0; j < N; ++j) {
                if (a[i][j] != 0 && comp[j] == -1) {
                    comp[j] = ncomp;
                    stack.push_back(j);
                }
            }
        }
        ++ncomp;
    }
    std::vector<std::vector<int>> groups(ncomp);
    for (int i = 0; i < N; ++i) groups[comp[i]].push_back(i);
    return groups;
}

bool incidence_matrix::irreducible() const {
    return support_components().size() == 1;
}

incidence_matrix incidence_matrix::cyclic(int N) {
    if (N == 2) return pair();
    incidence_matrix m;
    m.N = N;
    m.a.assign(N, std::vector<int>(N, 0));
    for (int i = 0; i < N; ++i) {
        const int j = (i + 1) % N;
        m.a[i][j] = 1;
        m.a[j][i] = -1;
    }
    return m;
}

incidence_matrix incidence_matrix::pair() {
    incidence_matrix m;
    m.N = 2;
    m.a = {{0, 1}, {-1, 0}};
    return m;
}

ivec alpha_apply(const incidence_matrix& alpha, const std::vector<ivec>& z,
                 int j) {
    const std::size_t d = z[0].size();
    ivec out(d, 0);
    for (int i = 0; i < alpha.N; ++i) {
        if (alpha.a[j][i] == 0) continue;
        for (std::size_t t = 0; t < d; ++t) out[t] += alpha.a[j][i] * z[i][t];
    }
    return out;
}

long long omega_form(const incidence_matrix& alpha, const std::vector<ivec>& z,
                     int j) {
    return idot(z[j], alpha_apply(alpha, z, j));
}

}  // namespace wavekin
