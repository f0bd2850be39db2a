#pragma once

#include <vector>

#include "wavekin/lattice.hpp"

namespace wavekin {

// sparse integer polynomial; exponents are stored per term, one entry per
// variable
struct int_polynomial {
    struct term {
        long long c;
        std::vector<int> expo;
    };
    int vars = 0;
    std::vector<term> terms;

    void add_term(long long c, std::vector<int> expo);  // merges duplicates
    int total_degree() const;
    long long eval(const std::vector<long long>& x) const;
    // value in [0, p); x entries may be any integers
    long long eval_mod(const std::vector<long long>& x, long long p) const;
};

// reduces the resonance system on (z_2 .. z_{N-1}) for fixed (z_1, v),
// where v = (alpha z)_1 eliminates z_N; requires alpha_{1N} != 0 so the
// elimination is invertible. Returns N-2 quadratic polynomials without
// constant term in (N-2)*d variables, ordered z_2 first.
std::vector<int_polynomial> quadric_system(const incidence_matrix& alpha,
                                           const ivec& z1, const ivec& v);

struct quadric_count_result {
    unsigned long long count = 0;
    double bound = 0;
    double ratio = 0;
};

// exact count of integer points of the reduced system in the cube
// |m|_inf <= R*L, against the combinatorial bound
// 2^{(N-2)d} * (N R L)^{(N-2)(d-1)} with the base clamped to >= 1
quadric_count_result quadric_intersection_count(const incidence_matrix& alpha,
                                                const ivec& z1, const ivec& v,
                                                double R, double L);

struct finite_field_result {
    unsigned long long count = 0;
    double bezout_bound = 0;
};

// exact count of common zeros over F_p^m, with the Bezout-type bound
// p^{m - #polys} * prod(deg_i)
finite_field_result finite_field_count(const std::vector<int_polynomial>& polys,
                                       long long p, int m);

}  // namespace wavekin
