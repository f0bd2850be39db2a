#pragma once

// Time kernels built from four damping rates. The central object is
//
//   Tcal^j(tau0) = int_0^{tau0} e^{-Gamma (tau0-u)} prod_{m != j}
//                  (1 - e^{-2 g_m u}) du,        Gamma = g_0 + .. + g_3,
//
// and the normalized kernel Z^j = Tcal^j / prod_{m != j} (1 - e^{-2 g_m
// tau0}). Two independent evaluation routes are kept side by side: the
// inclusion-exclusion closed form over 8 subset factors, and an adaptive
// quadrature of the normalized integrand. Tests and the acceptance gate
// compare them; production code uses the closed form.

#include <cstddef>

namespace wavekin {

// the four damping rates entering one resonance quadruple
struct gamma_quad {
    double g[4] = {1.0, 1.0, 1.0, 1.0};

    double total() const { return g[0] + g[1] + g[2] + g[3]; }
};

// (e^{-2 gs tau} - e^{-Gamma tau}) / (Gamma - 2 gs), extended continuously
// across Gamma = 2 gs. Requires Gamma > 0, gs >= 0, tau >= 0 finite; every
// magnitude combination evaluates without overflow or cancellation.
double T_factor(double gs, double Gamma, double tau);

// Tcal^j(tau0); j in [0, 4) picks the factor dropped from the product.
// Values lie in [0, min(tau0, 1/Gamma)]. Uses the 8-factor subset sum unless
// its measured cancellation would spoil the result (always the case for
// Gamma tau0 < 0.02), in which case a boundary-layer Gauss-Legendre rule
// evaluates the integral directly.
double Tcal_factor(const gamma_quad& g, int j, double tau0);

// Z^j(tau0), in [0, min(tau0, 1/g_j)]; tends to 1/Gamma as tau0 grows
double Z_closed(const gamma_quad& g, int j, double tau0);

// adaptive-bisection reference for Z^j; tol is relative to the result
double Z_quadrature(const gamma_quad& g, int j, double tau0,
                    double tol = 1e-10);

// common large-tau0 limit of the four kernels
double Z_infinity(const gamma_quad& g);

// all four kernels at once, sharing the 16 subset factors
struct kernel_bundle {
    double Z[4] = {0, 0, 0, 0};
};
kernel_bundle Z_all(const gamma_quad& g, double tau0);

}  // namespace wavekin
