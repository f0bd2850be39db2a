#include "wavekin/surface.hpp"

#include <cmath>
#include <stdexcept>

#include "wavekin/quadrules.hpp"
#include "wavekin/summation.hpp"

namespace wavekin {

namespace {

constexpr double k_pi = 3.14159265358979323846;

void check_options(int d, const surface_quad_options& opt) {
    if (d < 2 || d > 3)
        throw std::invalid_argument("sigma_integral: d must be 2 or 3");
    if (opt.radial < 2 || opt.azimuthal < 3 ||
        (d == 3 && (opt.polar < 2 || opt.plane_angle < 3)))
        throw std::invalid_argument("sigma_integral: too few quadrature nodes");
    if (!(opt.r_max > 0.0))
        throw std::invalid_argument("sigma_integral: need r_max > 0");
}

// largest |Phi| over a fixed fan of on-surface probes with max(|z1|, |z2|)
// equal to r
double shell_probe(const pair_weight& Phi, int d, double r) {
    static const double dirs2[][2] = {
        {1, 0}, {0, 1}, {0.70710678118654752, 0.70710678118654752},
        {0.94868329805051381, -0.31622776601683794}};
    static const double dirs3[][3] = {
        {1, 0, 0},
        {0, 1, 0},
        {0, 0, 1},
        {0.57735026918962576, 0.57735026918962576, 0.57735026918962576},
        {0.70710678118654752, -0.70710678118654752, 0},
        {0.26726124191242438, 0.53452248382484876, -0.80178372573727314}};
    double best = 0.0;
    std::vector<double> z1(d), z2(d);
    const int ndir = (d == 2) ? 4 : 6;
    for (int k = 0; k < ndir; ++k) {
        if (d == 2) {
            const double ux = dirs2[k][0], uy = dirs2[k][1];
            // probe along z1, along the perpendicular z2, and along both
            z1 = {r * ux, r * uy};
            z2 = {0.0, 0.0};
            best = std::max(best, std::fabs(Phi(z1, z2)));
            z2 = {-r * uy, r * ux};
            best = std::max(best, std::fabs(Phi(z1, z2)));
            z1 = {0.0, 0.0};
            best = std::max(best, std::fabs(Phi(z1, z2)));
        } else {
            const double* u = dirs3[k];
            double e1[3], e2[3];
            plane_frame(u, e1, e2);
            z1 = {r * u[0], r * u[1], r * u[2]};
            z2 = {0.0, 0.0, 0.0};
            best = std::max(best, std::fabs(Phi(z1, z2)));
            z2 = {r * e1[0], r * e1[1], r * e1[2]};
            best = std::max(best, std::fabs(Phi(z1, z2)));
            z1 = {0.0, 0.0, 0.0};
            best = std::max(best, std::fabs(Phi(z1, z2)));
        }
    }
    return best;
}

// rejects weights that are still alive at r_max, then shrinks the truncation
// radius to the outermost shell carrying weight (one dead octave of margin),
// so the radial rule spends its nodes where the weight lives
double checked_radius(const pair_weight& Phi, int d,
                      const surface_quad_options& opt) {
    double probe[11];
    double peak = 0.0;
    for (int k = 0; k <= 10; ++k) {
        probe[k] = shell_probe(Phi, d, opt.r_max * std::ldexp(1.0, -k));
        peak = std::max(peak, probe[k]);
    }
    if (peak == 0.0) return opt.r_max;  // identically small weight
    if (probe[0] > 1e-8 * peak)
        throw std::domain_error(
            "sigma_integral: weight shows no decay at the truncation radius; "
            "integral may diverge");
    int k = 0;
    while (k < 10 && probe[k] <= 1e-14 * peak) ++k;
    // probe[k] is the outermost live shell; keep one dead octave above it
    return std::min(opt.r_max, opt.r_max * std::ldexp(1.0, -(k - 1)));
}

double sigma_integral_2(const pair_weight& Phi, double r_eff,
                        const surface_quad_options& opt) {
    const radial_rule rad = radial_quad_rule(opt.radial, r_eff, 0);
    const int nr = static_cast<int>(rad.r.size());
    const int na = opt.azimuthal;
    const double wa = 2.0 * k_pi / na;

    // outer cells: (angle, radius); inner: signed line through z1-perp
    const std::size_t n_outer =
        static_cast<std::size_t>(na) * static_cast<std::size_t>(nr);
    return reduce_chunked(
        n_outer,
        [&](std::size_t idx) {
            const int k = static_cast<int>(idx) / nr;
            const int i = static_cast<int>(idx) % nr;
            const double ang = 2.0 * k_pi * k / na;
            const double ux = std::cos(ang), uy = std::sin(ang);
            const std::vector<double> z1{rad.r[i] * ux, rad.r[i] * uy};
            neumaier_sum inner;
            std::vector<double> z2(2);
            for (int j = 0; j < nr; ++j)
                for (int sgn : {-1, 1}) {
                    const double t = sgn * rad.r[j];
                    z2[0] = -t * uy;
                    z2[1] = t * ux;
                    inner.add(rad.w[j] * Phi(z1, z2));
                }
            return wa * rad.w[i] * inner.value();
        },
        opt.parallel, 1);
}

double sigma_integral_3(const pair_weight& Phi, double r_eff,
                        const surface_quad_options& opt) {
    // outer measure |z1|^{-1} dz1 = r dr dOmega; inner plane polar rho drho
    const radial_rule rad = radial_quad_rule(opt.radial, r_eff, 1);
    const int nr = static_cast<int>(rad.r.size());
    const auto& pol = gauss_legendre(opt.polar);
    const int na = opt.azimuthal, np = opt.plane_angle;
    const double wa = 2.0 * k_pi / na, wp = 2.0 * k_pi / np;

    const std::size_t n_outer = static_cast<std::size_t>(nr) *
                                static_cast<std::size_t>(opt.polar) *
                                static_cast<std::size_t>(na);
    return reduce_chunked(
        n_outer,
        [&](std::size_t idx) {
            const int k = static_cast<int>(idx % static_cast<std::size_t>(na));
            const int c = static_cast<int>((idx / na) % opt.polar);
            const int i = static_cast<int>(idx / (static_cast<std::size_t>(na) *
                                                  opt.polar));
            const double cosb = pol.x[c];
            const double sinb = std::sqrt(std::max(0.0, 1.0 - cosb * cosb));
            const double ang = 2.0 * k_pi * k / na;
            const double u[3] = {sinb * std::cos(ang), sinb * std::sin(ang),
                                 cosb};
            double e1[3], e2[3];
            plane_frame(u, e1, e2);
            const std::vector<double> z1{rad.r[i] * u[0], rad.r[i] * u[1],
                                         rad.r[i] * u[2]};
            neumaier_sum inner;
            std::vector<double> z2(3);
            for (int j = 0; j < nr; ++j)
                for (int m = 0; m < np; ++m) {
                    const double th = 2.0 * k_pi * m / np;
                    const double ca = std::cos(th), sa = std::sin(th);
                    for (int t = 0; t < 3; ++t)
                        z2[t] = rad.r[j] * (ca * e1[t] + sa * e2[t]);
                    inner.add(rad.w[j] * Phi(z1, z2));
                }
            return rad.w[i] * pol.w[c] * wa * wp * inner.value();
        },
        opt.parallel, 1);
}

}  // namespace

radial_rule radial_quad_rule(int n, double r_max, int pow) {
    if (n < 2 || !(r_max > 0.0))
        throw std::invalid_argument("radial_quad_rule: bad node count or range");
    // a short panel near 0 guards against weights much narrower than r_max;
    // the long panel carries the bulk and converges spectrally
    const int n_in = std::max(6, n / 3);
    const int n_out = std::max(10, n - n_in);
    const double split = r_max / 16.0;
    radial_rule out;
    out.r.reserve(static_cast<std::size_t>(n_in + n_out));
    out.w.reserve(static_cast<std::size_t>(n_in + n_out));
    const double edges[3] = {0.0, split, r_max};
    const int counts[2] = {n_in, n_out};
    for (int p = 0; p < 2; ++p) {
        const auto& gl = gauss_legendre(counts[p]);
        const double lo = edges[p], hi = edges[p + 1];
        for (int i = 0; i < counts[p]; ++i) {
            const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.x[i];
            out.r.push_back(r);
            out.w.push_back(0.5 * (hi - lo) * gl.w[i] * std::pow(r, pow));
        }
    }
    return out;
}

void plane_frame(const double u[3], double e1[3], double e2[3]) {
    // pick the coordinate axis least aligned with u, project it out
    int axis = 0;
    for (int t = 1; t < 3; ++t)
        if (std::fabs(u[t]) < std::fabs(u[axis])) axis = t;
    double a[3] = {0, 0, 0};
    a[axis] = 1.0;
    const double proj = u[axis];
    double norm = 0.0;
    for (int t = 0; t < 3; ++t) {
        e1[t] = a[t] - proj * u[t];
        norm += e1[t] * e1[t];
    }
    norm = std::sqrt(norm);
    for (int t = 0; t < 3; ++t) e1[t] /= norm;
    e2[0] = u[1] * e1[2] - u[2] * e1[1];
    e2[1] = u[2] * e1[0] - u[0] * e1[2];
    e2[2] = u[0] * e1[1] - u[1] * e1[0];
}

double sigma_integral(const pair_weight& Phi, int d,
                      const surface_quad_options& opt) {
    check_options(d, opt);
    if (!Phi.eval)
        throw std::invalid_argument("sigma_integral: missing weight callable");
    const double r_eff = checked_radius(Phi, d, opt);
    return (d == 2) ? sigma_integral_2(Phi, r_eff, opt)
                    : sigma_integral_3(Phi, r_eff, opt);
}

double C_d(int d) {
    if (d == 2)
        throw std::domain_error("C_d: closed form unavailable for d = 2");
    if (d < 2) throw std::invalid_argument("C_d: need d >= 2");
    return std::riemann_zeta(static_cast<double>(d - 1)) *
           std::riemann_zeta(static_cast<double>(4 * d - 2)) /
           (std::riemann_zeta(static_cast<double>(d)) *
            std::riemann_zeta(static_cast<double>(2 * d - 2)));
}

double orthogonality_sum_constant(int d) {
    if (d == 2)
        throw std::domain_error(
            "orthogonality_sum_constant: series diverges for d = 2");
    if (d < 2)
        throw std::invalid_argument("orthogonality_sum_constant: need d >= 2");
    return std::riemann_zeta(static_cast<double>(d - 1)) /
           std::riemann_zeta(static_cast<double>(d));
}

limit_check_result heath_brown_check(const pair_weight& Phi, int d,
                                     const std::vector<double>& Ls,
                                     const resonance_sum_options& sum_opts,
                                     const surface_quad_options& quad_opts) {
    limit_check_result out;
    out.surface = sigma_integral(Phi, d, quad_opts);
    out.density_limit = orthogonality_sum_constant(d) * out.surface;
    out.formula_limit = C_d(d) * out.surface;
    for (double L : Ls) {
        limit_check_row row;
        row.L = L;
        row.sum = resonance_sum_2(Phi, d, L, sum_opts);
        row.rel_vs_density =
            std::fabs(row.sum - out.density_limit) / std::fabs(out.density_limit);
        row.rel_vs_formula =
            std::fabs(row.sum - out.formula_limit) / std::fabs(out.formula_limit);
        out.rows.push_back(row);
    }
    return out;
}

}  // namespace wavekin
