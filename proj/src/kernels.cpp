#include "wavekin/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "wavekin/quadrules.hpp"

namespace wavekin {

namespace {

void check_rates(const gamma_quad& g, int j, double tau0) {
    for (double gm : g.g)
        if (!(gm > 0.0) || !std::isfinite(gm))
            throw std::invalid_argument("kernels: rates must be positive");
    if (j < 0 || j >= 4)
        throw std::invalid_argument("kernels: kernel index must be in [0, 4)");
    if (!(tau0 > 0.0) || !std::isfinite(tau0))
        throw std::invalid_argument("kernels: tau0 must be positive and finite");
}

// 1 - e^{-x} without cancellation for small x
double one_minus_exp(double x) { return -std::expm1(-x); }

// all 16 subset factors T_factor(gS, Gamma, tau0) in one pass; per-rate
// exponentials are shared through e^{-2 gS tau0} = prod e^{-2 g_m tau0},
// which loses only ulps once e^{delta tau0} sits away from 1, while the
// near-cancelling and extreme masks keep the exact T_factor branches
struct subset_table {
    double T[16];
    int bits[16];
};

subset_table subset_factors(const gamma_quad& g, double tau0) {
    subset_table out;
    const double Gamma = g.total();
    const double eG = std::exp(-Gamma * tau0);
    double base[4];
    for (int m = 0; m < 4; ++m) base[m] = std::exp(-2.0 * g.g[m] * tau0);
    double e2s[16], gS[16];
    e2s[0] = 1.0;
    gS[0] = 0.0;
    out.bits[0] = 0;
    for (int mask = 1; mask < 16; ++mask) {
        // gS accumulates in ascending-index order, matching a direct loop
        int high = 3;
        while (!(mask & (1 << high))) --high;
        const int rest = mask & ~(1 << high);
        gS[mask] = gS[rest] + g.g[high];
        e2s[mask] = e2s[rest] * base[high];
        out.bits[mask] = out.bits[rest] + 1;
    }
    for (int mask = 0; mask < 16; ++mask) {
        const double delta = Gamma - 2.0 * gS[mask];
        if (std::fabs(delta) * tau0 <= 0.5 || Gamma * tau0 >= 600.0 ||
            std::fabs(delta) < 1e-9 * Gamma)
            out.T[mask] = T_factor(gS[mask], Gamma, tau0);
        else
            out.T[mask] = (e2s[mask] - eG) / delta;
    }
    return out;
}

// inclusion-exclusion sum of the 8 subset factors for Tcal^j; amp reports
// the sum of magnitudes, so amp / |result| measures the cancellation
double tcal_subset_sum(const subset_table& tab, int j, double* amp) {
    double sum = 0.0;
    *amp = 0.0;
    for (int mask = 0; mask < 16; ++mask) {
        if (mask & (1 << j)) continue;
        const double term = tab.T[mask];
        *amp += std::fabs(term);
        sum += (tab.bits[mask] & 1) ? -term : term;
    }
    return sum;
}

// Gauss-Legendre evaluation of the Tcal^j integral in the layer variable
// v = Gamma (tau0 - u); the e^{-v} factor is resolved explicitly and the
// remaining factors vary on scales g_m / Gamma <= 1, so 32 nodes reach
// machine precision for any Gamma tau0
double tcal_layer_quadrature(const gamma_quad& g, int j, double tau0) {
    const double Gamma = g.total();
    const double vmax = std::min(Gamma * tau0, 45.0);
    const auto& gl = gauss_legendre(32);
    double sum = 0.0;
    for (int i = 0; i < 32; ++i) {
        const double v = 0.5 * vmax * (1.0 + gl.x[i]);
        const double u = tau0 - v / Gamma;
        double prod = std::exp(-v);
        for (int m = 0; m < 4; ++m)
            if (m != j) prod *= one_minus_exp(2.0 * g.g[m] * u);
        sum += 0.5 * vmax * gl.w[i] * prod;
    }
    return sum / Gamma;
}

// subset sum unless the measured cancellation would eat more than ~10 of the
// 16 digits; small Gamma tau0 always cancels (by ~(Gamma tau0)^3), so it goes
// straight to the layer quadrature
double tcal_eval(const gamma_quad& g, int j, double tau0) {
    if (g.total() * tau0 < 0.02) return tcal_layer_quadrature(g, j, tau0);
    const subset_table tab = subset_factors(g, tau0);
    double amp = 0.0;
    const double sum = tcal_subset_sum(tab, j, &amp);
    if (!(std::fabs(sum) * 1e6 >= amp))
        return tcal_layer_quadrature(g, j, tau0);
    return sum;
}

// denominator prod_{m != j} (1 - e^{-2 g_m tau0})
double z_denominator(const gamma_quad& g, int j, double tau0) {
    double den = 1.0;
    for (int m = 0; m < 4; ++m)
        if (m != j) den *= one_minus_exp(2.0 * g.g[m] * tau0);
    return den;
}

struct z_integrand {
    const gamma_quad* g;
    int j;
    double tau0;
    double Gamma;
    double log_den[4];  // log(1 - e^{-2 g_m tau0}) per factor

    double operator()(double u) const {
        double log_prod = -Gamma * (tau0 - u);
        for (int m = 0; m < 4; ++m) {
            if (m == j) continue;
            const double x = 2.0 * g->g[m] * u;
            if (g->g[m] * tau0 > 30.0)
                log_prod += std::log1p(-std::exp(-x)) - log_den[m];
            else
                log_prod += std::log(one_minus_exp(x)) - log_den[m];
        }
        // the result is never below ~1e-6 min(tau0, 1/Gamma); values this
        // deep are irrelevant and their subnormal noise would defeat the
        // refinement stopping rule
        return (log_prod < -600.0) ? 0.0 : std::exp(log_prod);
    }
};

// error budget is proportional to panel width, so accepted-panel errors sum
// to at most tol_density * (full interval); the machine-precision floor stops
// refinement once the comparison is pure roundoff
double adapt_bisect(const z_integrand& f, double a, double b, double whole,
                    double tol_density, int depth) {
    const auto& gl = gauss_legendre(12);
    const double m = 0.5 * (a + b);
    double left = 0.0, right = 0.0;
    for (int i = 0; i < 12; ++i) {
        left += 0.5 * (m - a) * gl.w[i] * f(0.5 * (a + m) + 0.5 * (m - a) * gl.x[i]);
        right += 0.5 * (b - m) * gl.w[i] * f(0.5 * (m + b) + 0.5 * (b - m) * gl.x[i]);
    }
    const double split = left + right;
    const double err = std::fabs(split - whole);
    if (depth >= 48 || err <= tol_density * (b - a) ||
        err <= 1e-14 * std::fabs(split))
        return split;
    return adapt_bisect(f, a, m, left, tol_density, depth + 1) +
           adapt_bisect(f, m, b, right, tol_density, depth + 1);
}

}  // namespace

double T_factor(double gs, double Gamma, double tau) {
    const double delta = Gamma - 2.0 * gs;
    if (std::fabs(delta) < 1e-9 * Gamma) {
        const double dt = delta * tau;
        return tau * std::exp(-Gamma * tau) *
               (1.0 + 0.5 * dt + dt * dt / 6.0);
    }
    if (delta * tau > 500.0)
        return (std::exp(-2.0 * gs * tau) - std::exp(-Gamma * tau)) / delta;
    return std::exp(-Gamma * tau) * std::expm1(delta * tau) / delta;
}

double Tcal_factor(const gamma_quad& g, int j, double tau0) {
    check_rates(g, j, tau0);
    return tcal_eval(g, j, tau0);
}

double Z_closed(const gamma_quad& g, int j, double tau0) {
    return Tcal_factor(g, j, tau0) / z_denominator(g, j, tau0);
}

double Z_quadrature(const gamma_quad& g, int j, double tau0, double tol) {
    check_rates(g, j, tau0);
    if (!(tol > 0.0))
        throw std::invalid_argument("Z_quadrature: tol must be positive");
    z_integrand f;
    f.g = &g;
    f.j = j;
    f.tau0 = tau0;
    f.Gamma = g.total();
    for (int m = 0; m < 4; ++m)
        f.log_den[m] = (g.g[m] * tau0 > 30.0)
                           ? std::log1p(-std::exp(-2.0 * g.g[m] * tau0))
                           : std::log(one_minus_exp(2.0 * g.g[m] * tau0));

    const auto& gl = gauss_legendre(12);
    double whole = 0.0;
    for (int i = 0; i < 12; ++i)
        whole += 0.5 * tau0 * gl.w[i] * f(0.5 * tau0 * (1.0 + gl.x[i]));
    // the coarse pass can miss the boundary layer at u = tau0 entirely. The
    // integrand increases monotonically, so half the layer width times the
    // mid-layer value is a certified lower bound on Z; it anchors the error
    // budget at the right magnitude.
    const double layer = std::min(tau0, 1.0 / f.Gamma);
    const double scale =
        std::max(whole, 0.5 * layer * f(tau0 - 0.5 * layer));
    return adapt_bisect(f, 0.0, tau0, whole, tol * scale / tau0, 0);
}

double Z_infinity(const gamma_quad& g) {
    check_rates(g, 0, 1.0);
    return 1.0 / g.total();
}

kernel_bundle Z_all(const gamma_quad& g, double tau0) {
    check_rates(g, 0, tau0);
    kernel_bundle out;
    const double Gamma = g.total();
    if (Gamma * tau0 < 0.02) {
        for (int j = 0; j < 4; ++j)
            out.Z[j] = tcal_layer_quadrature(g, j, tau0) /
                       z_denominator(g, j, tau0);
        return out;
    }
    // subset factors are shared: subsets not containing j contribute to Z^j
    const subset_table tab = subset_factors(g, tau0);
    double ome[4];
    for (int m = 0; m < 4; ++m) ome[m] = one_minus_exp(2.0 * g.g[m] * tau0);
    for (int j = 0; j < 4; ++j) {
        double amp = 0.0;
        double sum = tcal_subset_sum(tab, j, &amp);
        if (!(std::fabs(sum) * 1e6 >= amp))
            sum = tcal_layer_quadrature(g, j, tau0);
        double den = 1.0;
        for (int m = 0; m < 4; ++m)
            if (m != j) den *= ome[m];
        out.Z[j] = sum / den;
    }
    return out;
}

}  // namespace wavekin
