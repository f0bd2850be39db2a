#include "wavekin/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wavekin/kernels.hpp"
#include "wavekin/quadrules.hpp"
#include "wavekin/resonance_sum.hpp"
#include "wavekin/summation.hpp"
#include "wavekin/surface.hpp"

namespace wavekin {

namespace {

constexpr double k_pi = 3.14159265358979323846;

// bracket of Eq-style display order: Z^4 v1 v2 v3 + Z^3 v1 v2 v4
//                                  - Z^2 v1 v3 v4 - Z^1 v2 v3 v4
inline void kin_terms(const double Z[4], double v1, double v2, double v3,
                      double v4, double w, double out[4]) {
    out[0] = w * Z[3] * v1 * v2 * v3;
    out[1] = w * Z[2] * v1 * v2 * v4;
    out[2] = -w * Z[1] * v1 * v3 * v4;
    out[3] = -w * Z[0] * v2 * v3 * v4;
}

void kernels_at(const gamma_quad& g, double tau0, double Z[4]) {
    if (std::isinf(tau0)) {
        const double zi = Z_infinity(g);
        Z[0] = Z[1] = Z[2] = Z[3] = zi;
    } else {
        const kernel_bundle b = Z_all(g, tau0);
        for (int j = 0; j < 4; ++j) Z[j] = b.Z[j];
    }
}

void check_tau0(double tau0) {
    if (std::isnan(tau0) || tau0 <= 0.0)
        throw std::invalid_argument(
            "apply_K: tau0 must be positive (or +infinity)");
}

void check_opt(const kinetic_options& opt) {
    if (opt.radial < 2 || opt.polar < 2 || opt.plane_angle < 3)
        throw std::invalid_argument("apply_K: too few quadrature nodes");
}

double dissipation_scale(double s_abs, const model_params& p) {
    return s_abs + 12.0 * p.forcing.sigma;
}

// max over fields of the absolute kinetic bracket at one surface point
double bracket_probe(const double z1[3], const double z2[3], double s_abs,
                     double tau0, const model_params& p,
                     const std::vector<radial_fn>& vs,
                     const std::vector<double>& v4s) {
    const double a1 = std::sqrt(z1[0] * z1[0] + z1[1] * z1[1] +
                                (s_abs + z1[2]) * (s_abs + z1[2]));
    const double a2 = std::sqrt(z2[0] * z2[0] + z2[1] * z2[1] +
                                (s_abs + z2[2]) * (s_abs + z2[2]));
    const double x = z1[0] + z2[0], y = z1[1] + z2[1],
                 z = s_abs + z1[2] + z2[2];
    const double a3 = std::sqrt(x * x + y * y + z * z);
    const gamma_quad g{{gamma_abs(a1, p), gamma_abs(a2, p), gamma_abs(a3, p),
                        gamma_abs(s_abs, p)}};
    double Z[4];
    kernels_at(g, tau0, Z);
    double peak = 0.0;
    for (std::size_t k = 0; k < vs.size(); ++k) {
        double t[4];
        kin_terms(Z, vs[k](a1), vs[k](a2), vs[k](a3), v4s[k], 1.0, t);
        peak = std::max(peak, std::fabs(t[0] + t[1] + t[2] + t[3]));
    }
    return peak;
}

// shell decay probe in the spirit of sigma_integral: reject integrands that
// are still live at the truncation radius, and pull the radius in when the
// outer octaves are dead. Returns 0 when the integrand vanishes everywhere
// probed (the integral is then taken as exactly 0).
double checked_radius(double r_max, double s_abs, double tau0,
                      const model_params& p, const std::vector<radial_fn>& vs,
                      const std::vector<double>& v4s) {
    static const double dirs[7][6] = {
        {1, 0, 0, 0, 0, 0}, {0, 0, 0, 1, 0, 0},  {1, 0, 0, 0, 1, 0},
        {0, 0, 1, 1, 0, 0}, {1, 0, 0, 0, 0, 1},  {0, 0, -1, 1, 0, 0},
        {0.7071067811865476, 0, 0.7071067811865476, 0, 1, 0}};
    const int shells = 11;
    double level[shells];
    double peak = 0.0;
    for (int k = 0; k < shells; ++k) {
        const double r = r_max * std::pow(2.0, -k);
        double m = 0.0;
        for (const auto& c : dirs) {
            const double z1[3] = {r * c[0], r * c[1], r * c[2]};
            const double z2[3] = {r * c[3], r * c[4], r * c[5]};
            m = std::max(m, bracket_probe(z1, z2, s_abs, tau0, p, vs, v4s));
        }
        level[k] = m;
        peak = std::max(peak, m);
    }
    if (peak == 0.0) return 0.0;
    if (level[0] > 1e-8 * peak)
        throw std::domain_error(
            "apply_K: integrand shows no decay at the truncation radius; "
            "integral may diverge");
    int k = 0;
    while (k < shells && level[k] <= 1e-14 * peak) ++k;
    return r_max * std::pow(2.0, -std::max(0, k - 1));
}

std::vector<double> hoisted_values(const std::vector<radial_fn>& vs,
                                   double s_abs) {
    std::vector<double> v4s(vs.size());
    for (std::size_t k = 0; k < vs.size(); ++k) {
        if (!vs[k]) throw std::invalid_argument("apply_K: empty field callable");
        v4s[k] = vs[k](s_abs);
    }
    return v4s;
}

}  // namespace

kinetic_nodes::kinetic_nodes(double s_abs, double r_max,
                             const model_params& p,
                             const kinetic_options& opt) {
    p.validate();
    scale_ = 4.0 * C_d(p.d);  // throws for d = 2 before the dimension check
    if (p.d != 3)
        throw std::invalid_argument("apply_K: quadrature supports d = 3 only");
    check_opt(opt);
    if (!(s_abs >= 0.0) || !std::isfinite(s_abs))
        throw std::invalid_argument("apply_K: base radius must be >= 0");
    if (!(r_max > 0.0) || !std::isfinite(r_max))
        throw std::invalid_argument("apply_K: truncation radius must be > 0");
    s_ = s_abs;
    gamma_s_ = gamma_abs(s_abs, p);
    parallel_ = opt.parallel;

    // s sits on the polar axis and the fields are radial, so the z1 azimuth
    // integrates exactly to 2 pi and only (r1, cos, r2, psi) remain
    const radial_rule rad = radial_quad_rule(opt.radial, r_max, 1);
    const int nr = static_cast<int>(rad.r.size());
    const quad_rule& pol = gauss_legendre(opt.polar);
    const int np = opt.plane_angle;
    const double wp = 2.0 * k_pi / np;

    const std::size_t n = static_cast<std::size_t>(nr) * opt.polar * nr * np;
    a1_.resize(n);
    a2_.resize(n);
    a3_.resize(n);
    g1_.resize(n);
    g2_.resize(n);
    g3_.resize(n);
    w_.resize(n);

    std::size_t idx = 0;
    for (int i = 0; i < nr; ++i)
        for (int c = 0; c < opt.polar; ++c) {
            const double cosb = pol.x[c];
            const double sinb = std::sqrt(std::max(0.0, 1.0 - cosb * cosb));
            const double u[3] = {sinb, 0.0, cosb};
            double e1[3], e2[3];
            plane_frame(u, e1, e2);
            const double r1 = rad.r[i];
            const double z1[3] = {r1 * u[0], 0.0, r1 * u[2]};
            const double a1 =
                std::sqrt(std::max(0.0, r1 * r1 + s_ * s_ + 2.0 * s_ * r1 * cosb));
            const double w_outer = 2.0 * k_pi * rad.w[i] * pol.w[c];
            for (int j = 0; j < nr; ++j)
                for (int m = 0; m < np; ++m) {
                    const double th = 2.0 * k_pi * m / np;
                    const double ca = std::cos(th), sa = std::sin(th);
                    double z2[3];
                    for (int t = 0; t < 3; ++t)
                        z2[t] = rad.r[j] * (ca * e1[t] + sa * e2[t]);
                    const double a2 =
                        std::sqrt(z2[0] * z2[0] + z2[1] * z2[1] +
                                  (s_ + z2[2]) * (s_ + z2[2]));
                    const double sx = z1[0] + z2[0], sy = z2[1],
                                 sz = s_ + z1[2] + z2[2];
                    const double a3 = std::sqrt(sx * sx + sy * sy + sz * sz);
                    a1_[idx] = a1;
                    a2_[idx] = a2;
                    a3_[idx] = a3;
                    g1_[idx] = gamma_abs(a1, p);
                    g2_[idx] = gamma_abs(a2, p);
                    g3_[idx] = gamma_abs(a3, p);
                    w_[idx] = w_outer * rad.w[j] * wp;
                    ++idx;
                }
        }
}

std::vector<kinetic_split> kinetic_nodes::apply_many(
    double tau0, const std::vector<radial_fn>& vs) const {
    check_tau0(tau0);
    if (vs.empty()) throw std::invalid_argument("apply_K: no fields given");
    const std::vector<double> v4s = hoisted_values(vs, s_);
    const std::size_t nf = vs.size();

    const std::vector<double> acc = reduce_chunked_vec(
        w_.size(), 4 * nf,
        [&](std::size_t i, std::vector<neumaier_sum>& out) {
            const gamma_quad g{{g1_[i], g2_[i], g3_[i], gamma_s_}};
            double Z[4];
            kernels_at(g, tau0, Z);
            for (std::size_t k = 0; k < nf; ++k) {
                double t[4];
                kin_terms(Z, vs[k](a1_[i]), vs[k](a2_[i]), vs[k](a3_[i]),
                          v4s[k], w_[i], t);
                for (int q = 0; q < 4; ++q) out[4 * k + q].add(t[q]);
            }
        },
        parallel_, 1024);

    std::vector<kinetic_split> res(nf);
    for (std::size_t k = 0; k < nf; ++k)
        for (int q = 0; q < 4; ++q) res[k].term[q] = scale_ * acc[4 * k + q];
    return res;
}

kinetic_split kinetic_nodes::apply(double tau0, const radial_fn& v) const {
    return apply_many(tau0, {v})[0];
}

std::vector<kinetic_split> apply_K_split_many(double tau0,
                                              const std::vector<radial_fn>& vs,
                                              double s_abs,
                                              const model_params& p,
                                              const kinetic_options& opt) {
    p.validate();
    check_tau0(tau0);
    check_opt(opt);
    if (vs.empty()) throw std::invalid_argument("apply_K: no fields given");
    if (!(s_abs >= 0.0) || !std::isfinite(s_abs))
        throw std::invalid_argument("apply_K: base radius must be >= 0");
    if (opt.r_max < 0.0 || !std::isfinite(opt.r_max))
        throw std::invalid_argument("apply_K: bad truncation radius");
    // the constant-availability error must fire before any probing
    (void)C_d(p.d);
    if (p.d != 3)
        throw std::invalid_argument("apply_K: quadrature supports d = 3 only");

    const double r_max =
        opt.r_max > 0.0 ? opt.r_max : dissipation_scale(s_abs, p);
    const std::vector<double> v4s = hoisted_values(vs, s_abs);
    const double r_eff = checked_radius(r_max, s_abs, tau0, p, vs, v4s);
    if (r_eff == 0.0) return std::vector<kinetic_split>(vs.size());

    const kinetic_nodes nodes(s_abs, r_eff, p, opt);
    return nodes.apply_many(tau0, vs);
}

kinetic_split apply_K_split(double tau0, const radial_fn& v, double s_abs,
                            const model_params& p,
                            const kinetic_options& opt) {
    return apply_K_split_many(tau0, {v}, s_abs, p, opt)[0];
}

double apply_K(double tau0, const radial_fn& v, double s_abs,
               const model_params& p, const kinetic_options& opt) {
    return apply_K_split(tau0, v, s_abs, p, opt).total();
}

kinetic_split apply_K_inf_split(const radial_fn& v, double s_abs,
                                const model_params& p,
                                const kinetic_options& opt) {
    const double inf = std::numeric_limits<double>::infinity();
    return apply_K_split(inf, v, s_abs, p, opt);
}

double apply_K_inf(const radial_fn& v, double s_abs, const model_params& p,
                   const kinetic_options& opt) {
    return apply_K_inf_split(v, s_abs, p, opt).total();
}

double apply_K_tau(double tau, double tau0, const radial_fn& v, double s_abs,
                   const model_params& p, const kinetic_options& opt) {
    if (!(tau > 0.0) || tau > 1.0)
        throw std::invalid_argument("apply_K_tau: tau must lie in (0, 1]");
    const double gs = gamma_abs(s_abs, p);
    const double pre = -std::expm1(-2.0 * gs * tau) / (2.0 * gs);
    return pre * apply_K(tau0, v, s_abs, p, opt);
}

std::vector<double> apply_K_profile(double tau0, const radial_fn& v,
                                    const std::vector<double>& s_abs,
                                    const model_params& p,
                                    const kinetic_options& opt) {
    std::vector<double> out(s_abs.size());
    for (std::size_t i = 0; i < s_abs.size(); ++i)
        out[i] = apply_K(tau0, v, s_abs[i], p, opt);
    return out;
}

double n0_spectrum(double abs_s, double tau0, const model_params& p) {
    if (std::isnan(tau0) || tau0 < 0.0)
        throw std::invalid_argument("n0_spectrum: tau0 must be >= 0");
    const double B = B_coeff_abs(abs_s, p);
    if (std::isinf(tau0)) return B;
    return B * (-std::expm1(-2.0 * gamma_abs(abs_s, p) * tau0));
}

// ---- lattice route ----------------------------------------------------------

namespace {

// spectrum and dissipation as functions of the squared radius; the weight
// table is built on a y-grid that starts one cell below 0, and the ghost
// row must continue the branch of gamma0 that is active at small positive
// y, or the rate cap puts a kink at y = 0 and the interpolation across the
// first cell drops to second order
double gamma_y(double y, const model_params& p) {
    if (y >= 0.0) return gamma0(y, p);
    const double c = p.gamma0_coeffs.empty() ? 1.0 : p.gamma0_coeffs[0];
    // the floor on 1 + y only binds for very coarse tables, where the ghost
    // corner sits two cells below zero
    return c >= 1.0 ? c * std::pow(std::max(1.0 + y, 0.5), p.r_star) : 1.0;
}

double n0_y(double y, double tau0, const model_params& p) {
    const double sg = p.forcing.sigma;
    const double b2 = p.forcing.b0 * p.forcing.b0 * std::exp(-y / (sg * sg));
    const double g = gamma_y(y, p);
    if (std::isinf(tau0)) return b2 / g;
    return b2 / g * (-std::expm1(-2.0 * g * tau0));
}

double x_weight_y(double y1, double y2, double y3, double tau0,
                  const model_params& p, double gamma_s, double n_s) {
    const gamma_quad g{
        {gamma_y(y1, p), gamma_y(y2, p), gamma_y(y3, p), gamma_s}};
    double Z[4];
    kernels_at(g, tau0, Z);
    double t[4];
    kin_terms(Z, n0_y(y1, tau0, p), n0_y(y2, tau0, p), n0_y(y3, tau0, p), n_s,
              1.0, t);
    return t[0] + t[1] + t[2] + t[3];
}

// Catmull-Rom weight row for local coordinate t in [0, 1]
inline void cr_weights(double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

// weight table over (y1, y2) = (|z1|^2, |z2|^2), valid at s = 0 only where
// |z1 + z2|^2 = y1 + y2 on the resonant surface
struct weight_table {
    int n = 0;        // query grid resolution; stored grid has n + 3 rows
    double h = 0.0;   // grid spacing, rows start at y = -h
    std::vector<double> val;

    void build(int n_in, double y_max, double tau0, const model_params& p,
               bool parallel) {
        n = n_in;
        h = y_max / (n - 1);
        const int rows = n + 3;
        val.assign(static_cast<std::size_t>(rows) * rows, 0.0);
        const double gamma_s = gamma_y(0.0, p);
        const double n_s = n0_y(0.0, tau0, p);
#pragma omp parallel for schedule(dynamic, 4) if (parallel)
        for (int i = 0; i < rows; ++i) {
            const double y1 = (i - 1) * h;
            for (int j = 0; j < rows; ++j) {
                const double y2 = (j - 1) * h;
                val[static_cast<std::size_t>(i) * rows + j] =
                    x_weight_y(y1, y2, y1 + y2, tau0, p, gamma_s, n_s);
            }
        }
    }

    double operator()(double y1, double y2) const {
        const int rows = n + 3;
        double x = y1 / h + 1.0, y = y2 / h + 1.0;
        x = std::min(std::max(x, 1.0), static_cast<double>(n));
        y = std::min(std::max(y, 1.0), static_cast<double>(n));
        const int i = static_cast<int>(x), j = static_cast<int>(y);
        double wr[4], wc[4];
        cr_weights(x - i, wr);
        cr_weights(y - j, wc);
        double sum = 0.0;
        for (int a = 0; a < 4; ++a) {
            const double* row =
                &val[static_cast<std::size_t>(i - 1 + a) * rows + (j - 1)];
            sum += wr[a] * (wc[0] * row[0] + wc[1] * row[1] + wc[2] * row[2] +
                            wc[3] * row[3]);
        }
        return sum;
    }
};

double sq_norm(const std::vector<double>& z) {
    double s = 0.0;
    for (double x : z) s += x * x;
    return s;
}

}  // namespace

double X_lattice(const std::vector<double>& s, double tau0, double tau,
                 double L, const model_params& p,
                 const x_lattice_options& opt) {
    p.validate();
    const int d = p.d;
    if (d != 2 && d != 3)
        throw std::invalid_argument("X_lattice: d must be 2 or 3");
    if (s.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("X_lattice: base point has wrong size");
    if (!(L >= 2.0))
        throw std::invalid_argument("X_lattice: L must be >= 2");
    if (!std::isfinite(tau) || tau < 0.0)
        throw std::invalid_argument("X_lattice: tau must be >= 0");
    if (std::isnan(tau0) || tau0 < 0.0)
        throw std::invalid_argument("X_lattice: tau0 must be >= 0");
    if (tau == 0.0 || tau0 == 0.0) return 0.0;

    const double s_norm = std::sqrt(sq_norm(s));
    bool s_zero = true;
    for (double x : s) s_zero = s_zero && x == 0.0;

    const double box =
        opt.box > 0.0 ? opt.box : 5.3 * p.forcing.sigma + s_norm;
    int table_n = opt.table;
    if (table_n < 0) table_n = (s_zero && L >= 24.0) ? 640 : 0;
    if (table_n > 0 && !s_zero)
        throw std::invalid_argument(
            "X_lattice: the weight table requires s = 0");
    if (table_n > 0 && table_n < 16)
        throw std::invalid_argument("X_lattice: table resolution too small");

    const double gamma_s = gamma_abs(s_norm, p);
    const double n_s = n0_spectrum(s_norm, tau0, p);

    pair_weight Phi;
    weight_table tbl;
    if (table_n > 0) {
        tbl.build(table_n, box * box, tau0, p, opt.parallel);
        Phi = pair_weight::generic([&tbl](const std::vector<double>& z1,
                                          const std::vector<double>& z2) {
            return tbl(sq_norm(z1), sq_norm(z2));
        });
    } else {
        Phi = pair_weight::generic([&](const std::vector<double>& z1,
                                       const std::vector<double>& z2) {
            double y1 = 0.0, y2 = 0.0, y3 = 0.0;
            for (int t = 0; t < d; ++t) {
                const double u1 = s[static_cast<std::size_t>(t)] +
                                  z1[static_cast<std::size_t>(t)];
                const double u2 = s[static_cast<std::size_t>(t)] +
                                  z2[static_cast<std::size_t>(t)];
                const double u3 = u1 + z2[static_cast<std::size_t>(t)];
                y1 += u1 * u1;
                y2 += u2 * u2;
                y3 += u3 * u3;
            }
            return x_weight_y(y1, y2, y3, tau0, p, gamma_s, n_s);
        });
    }

    resonance_sum_options ro;
    ro.exclude_zeros = true;
    ro.d2_lognorm = false;  // the lattice functional carries no log factor
    ro.box = box;
    ro.parallel = opt.parallel;
    const double S = resonance_sum_2(Phi, d, L, ro);
    return 4.0 * tau * S;
}

}  // namespace wavekin
