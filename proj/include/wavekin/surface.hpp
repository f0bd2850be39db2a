#pragma once

// Quadrature over the resonant pair surface {z1 . z2 = 0} against the Leray
// measure (|z1|^2 + |z2|^2)^{-1/2} dS. The coarea factorization turns it into
// an outer integral over z1 weighted by |z1|^{-1} and an inner integral over
// the hyperplane perpendicular to z1. Also hosts the closed-form constants
// that scale the surface integral in the large-L limit of the lattice pair
// sum.

#include <vector>

#include "wavekin/resonance_sum.hpp"

namespace wavekin {

struct surface_quad_options {
    int radial = 48;       // radial nodes on [0, r_max], outer and inner
    int polar = 16;        // d = 3: Gauss-Legendre nodes in cos(theta) for z1
    int azimuthal = 32;    // circle nodes for the z1 direction
    int plane_angle = 24;  // d = 3: circle nodes for z2 inside the z1-plane
    double r_max = 40.0;
    bool parallel = true;
};

// nodes r_i > 0 and weights w_i with sum w_i f(r_i) approximating
// int_0^{r_max} f(r) r^pow dr. Gauss-Legendre on geometric panels that
// refine toward 0, so weights peaked at any scale above ~1e-3 r_max are
// resolved. The integrands here are smooth at r = 0 (the coarea factor
// |z1|^{-1} is already folded into pow), so no node sits at 0 yet none is
// needed there.
struct radial_rule {
    std::vector<double> r, w;
};
radial_rule radial_quad_rule(int n, double r_max, int pow);

// orthonormal frame (e1, e2) of the plane perpendicular to the unit vector u
void plane_frame(const double u[3], double e1[3], double e2[3]);

// integral of Phi over {z1 . z2 = 0} against the Leray measure. Throws
// std::domain_error when Phi shows no decay at the truncation radius
// (the integral may diverge).
double sigma_integral(const pair_weight& Phi, int d,
                      const surface_quad_options& opt = {});

// zeta(d-1) zeta(4d-2) / (zeta(d) zeta(2d-2)); defined for d >= 3 and
// squeezed between 1 and 1 + 2^(2-d)
double C_d(int d);

// density of orthogonal lattice pairs relative to the continuum product
// measure: the singular series prod_p (1 - p^-d) / (1 - p^-(d-1)) =
// zeta(d-1) / zeta(d). Multiplies the surface integral in the large-L limit
// of the normalized pair sum. Defined for d >= 3.
double orthogonality_sum_constant(int d);

struct limit_check_row {
    double L = 0.0;
    double sum = 0.0;          // normalized lattice pair sum at this L
    double rel_vs_density = 0.0;  // residual against the singular-series limit
    double rel_vs_formula = 0.0;  // residual against C_d times the surface
};

struct limit_check_result {
    double surface = 0.0;        // sigma_integral of Phi
    double density_limit = 0.0;  // orthogonality_sum_constant(d) * surface
    double formula_limit = 0.0;  // C_d(d) * surface
    std::vector<limit_check_row> rows;
};

// runs the normalized pair sum across the given lattice sizes and tabulates
// the relative residuals against both candidate limits
limit_check_result heath_brown_check(const pair_weight& Phi, int d,
                                     const std::vector<double>& Ls,
                                     const resonance_sum_options& sum_opts = {},
                                     const surface_quad_options& quad_opts = {});

}  // namespace wavekin
