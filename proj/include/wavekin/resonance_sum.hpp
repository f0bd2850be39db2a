#pragma once

// Normalized lattice sums over resonance sets: the pair sum over z1 . z2 = 0
// and the N-fold sums over omega_j(z) = 0 for skew incidence matrices, with
// the d = 2 logarithmic normalization (ln L)^{-N/2}.

#include <functional>
#include <vector>

#include "wavekin/lattice.hpp"

namespace wavekin {

using pair_fn = std::function<double(const std::vector<double>&,
                                     const std::vector<double>&)>;
using tuple_fn = std::function<double(const std::vector<std::vector<double>>&)>;

// test function on frequency pairs; a separable radial form value =
// radial1(|z1|^2) * radial2(|z2|^2) unlocks table-driven inner loops
struct pair_weight {
    pair_fn eval;
    std::function<double(double)> radial1, radial2;

    bool separable() const {
        return static_cast<bool>(radial1) && static_cast<bool>(radial2);
    }
    double operator()(const std::vector<double>& z1,
                      const std::vector<double>& z2) const {
        return eval(z1, z2);
    }

    static pair_weight gaussian(double amp, double a1, double a2);
    static pair_weight product(std::function<double(double)> f1,
                               std::function<double(double)> f2);
    static pair_weight generic(pair_fn f);
};

struct resonance_sum_options {
    bool exclude_zeros = true;  // primed sum: drop z1 = 0 / z2 = 0 terms
    bool d2_lognorm = true;
    double box = 0.0;  // |z_j| cut in frequency units; 0 = decay-probed
    bool parallel = true;
};

// L^{2(1-d)} sum of Phi(z1, z2) over lattice pairs with z1 . z2 = 0
double resonance_sum_2(const pair_weight& Phi, int d, double L,
                       const resonance_sum_options& opts = {});

struct nsum_result {
    double value = 0.0;
    double tail_bound = 0.0;  // crude boundary-shell estimate
    unsigned long long admissible_points = 0;
};

// L^{N(1-d)} sum of Phi over z in the admissible set (z_j != 0,
// (alpha z)_j != 0) with omega_j(z) = 0 for every j, |z_j| <= box
nsum_result resonance_sum_N_info(const tuple_fn& Phi,
                                 const incidence_matrix& alpha, int d,
                                 double L, double box,
                                 const resonance_sum_options& opts = {});
double resonance_sum_N(const tuple_fn& Phi, const incidence_matrix& alpha,
                       int d, double L, double box = 6.0,
                       const resonance_sum_options& opts = {});

}  // namespace wavekin
