#pragma once

// Integer-lattice geometry: sites s = m/L, exact orthogonal-complement bases
// via unimodular column reduction, small Hermite-style linear solves, and the
// skew incidence matrices defining the resonance forms omega_j.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <vector>

namespace wavekin {

using ivec = std::vector<long long>;

long long idot(const ivec& a, const ivec& b);
long long inorm2(const ivec& m);
long long inorm_inf(const ivec& m);
bool is_zero_vec(const ivec& m);

// frequency site s = m / L; dot products stay in exact integer arithmetic
struct int_site {
    ivec m;
    double L = 1.0;

    std::vector<double> s() const;
};

// g >= 0 and a*x + b*y = g
struct egcd_result {
    long long g, x, y;
};
egcd_result extended_gcd(long long a, long long b);

// basis (d-1 columns) of the sublattice {x in Z^d : x . m = 0}; every integer
// solution is an integer combination of the basis. Throws on m = 0.
std::vector<ivec> orthogonal_basis(const ivec& m);

// shortens a rank-2 basis in place (Lagrange reduction); keeps the lattice
void lagrange_reduce(ivec& b1, ivec& b2);

// all x with x . m = 0, 0 < |x|_inf <= M, each exactly once, fixed order
std::vector<ivec> enumerate_orthogonal(const ivec& m, long long M);

// ordered pairs (m1, m2), both nonzero, |m_i|_inf <= M, m1 . m2 = 0
long long count_resonant_pairs(int d, long long M);

// exact integer solution set of (rows) x = rhs: one particular solution and
// a basis of the homogeneous solution lattice; nullopt when no integer
// solution exists
struct integer_affine_set {
    ivec particular;
    std::vector<ivec> kernel;
};
std::optional<integer_affine_set> solve_integer_linear(
    const std::vector<ivec>& rows, const ivec& rhs);

// visits every x = P + sum_i c_i K_i with |x|_inf <= M in a fixed order
template <class Visit>
void for_each_affine_box(const ivec& P, const std::vector<ivec>& kernel,
                         long long M, Visit&& visit);
std::vector<ivec> enumerate_affine_box(const ivec& P,
                                       const std::vector<ivec>& kernel,
                                       long long M);

// skew matrix with entries in {-1,0,1}; omega_j(z) = z_j . (alpha z)_j on
// N-tuples of integer d-vectors, and sum_j omega_j = 0 identically
struct incidence_matrix {
    int N = 0;
    std::vector<std::vector<int>> a;

    void validate() const;  // shape, entry range, skew-symmetry
    bool has_zero_row() const;
    bool irreducible() const;  // support graph connected
    // connected components of the support graph, each sorted
    std::vector<std::vector<int>> support_components() const;

    static incidence_matrix cyclic(int N);
    static incidence_matrix pair();
};

ivec alpha_apply(const incidence_matrix& alpha, const std::vector<ivec>& z,
                 int j);
long long omega_form(const incidence_matrix& alpha, const std::vector<ivec>& z,
                     int j);

// ---- template bodies ---------------------------------------------------------

namespace detail {

template <class Visit>
void affine_walk(const ivec& P, const std::vector<ivec>& kernel, long long M,
                 std::size_t level, ivec& x, Visit& visit) {
    if (level == kernel.size()) {
        if (inorm_inf(x) <= M) visit(x);
        return;
    }
    const ivec& K = kernel[level];
    if (kernel.size() == 1 || level + 1 == kernel.size()) {
        // exact coefficient interval from per-coordinate constraints
        long long lo = -(1LL << 62), hi = (1LL << 62);
        bool empty = false;
        for (std::size_t j = 0; j < K.size(); ++j) {
            if (K[j] == 0) {
                if (std::llabs(x[j]) > M) empty = true;
                continue;
            }
            // |x_j + c K_j| <= M
            double a = (-(double)M - (double)x[j]) / (double)K[j];
            double b = ((double)M - (double)x[j]) / (double)K[j];
            if (a > b) std::swap(a, b);
            lo = std::max(lo, (long long)std::ceil(a - 1e-9));
            hi = std::min(hi, (long long)std::floor(b + 1e-9));
        }
        if (empty || lo > hi) return;
        ivec y = x;
        for (long long c = lo; c <= hi; ++c) {
            for (std::size_t j = 0; j < K.size(); ++j) y[j] = x[j] + c * K[j];
            if (inorm_inf(y) <= M)
                affine_walk(P, kernel, M, level + 1, y, visit);
        }
        return;
    }
    // generic level: conservative dual-norm bound, exact filter at the leaf
    double g11 = 0, g22 = 0, g12 = 0, xn = 0;
    for (std::size_t j = 0; j < K.size(); ++j) xn += (double)x[j] * x[j];
    const ivec& K2 = kernel[level + 1];
    for (std::size_t j = 0; j < K.size(); ++j) {
        g11 += (double)K[j] * K[j];
        g22 += (double)K2[j] * K2[j];
        g12 += (double)K[j] * K2[j];
    }
    const double vol2 = std::max(g11 * g22 - g12 * g12, 1.0);
    const double reach = std::sqrt((double)K.size()) * M + std::sqrt(xn);
    const long long C =
        (long long)std::floor(reach * std::sqrt(g22 / vol2)) + 1;
    ivec y = x;
    for (long long c = -C; c <= C; ++c) {
        for (std::size_t j = 0; j < K.size(); ++j) y[j] = x[j] + c * K[j];
        affine_walk(P, kernel, M, level + 1, y, visit);
    }
}

}  // namespace detail

template <class Visit>
void for_each_affine_box(const ivec& P, const std::vector<ivec>& kernel,
                         long long M, Visit&& visit) {
    ivec x = P;
    detail::affine_walk(P, kernel, M, 0, x, visit);
}

}  // namespace wavekin
