#pragma once

// The cubic kinetic operator on radial spectra and its lattice counterpart.
//
//   K_s(tau0)(v) = 4 C_d INT_{Sigma_s} mu(ds1 ds2)
//                  (Z^4 v1 v2 v3 + Z^3 v1 v2 v4 - Z^2 v1 v3 v4 - Z^1 v2 v3 v4)
//
// with s3 = s1 + s2 - s, s4 = s, v_j = v(|s_j|), and the kernels Z^j taken at
// the node's dissipation quadruple (gamma_{s1}, gamma_{s2}, gamma_{s3},
// gamma_s). The signed pieces are named positionally, K^1..K^4 in display
// order, so that kappa = (+1, +1, -1, -1) makes every kappa_j K^j nonnegative
// on nonnegative fields. X_lattice is the independent discrete route: the
// same bracket summed over resonant lattice pairs with n^(0) in place of v,
// which must approach tau * K as L grows.

#include <functional>
#include <vector>

#include "wavekin/model.hpp"

namespace wavekin {

using radial_fn = std::function<double(double)>;

struct kinetic_options {
    int radial = 40;       // nodes for |z1| and |z2|, split-panel Gauss rules
    int polar = 12;        // Gauss-Legendre nodes in cos(angle between z1, s)
    int plane_angle = 16;  // circle nodes for z2 inside the plane z1-perp
    double r_max = 0.0;    // 0: s_abs + 12 * forcing sigma
    bool parallel = true;
};

// signed pieces of the operator; total() is the operator value
struct kinetic_split {
    double term[4] = {0.0, 0.0, 0.0, 0.0};
    double total() const { return term[0] + term[1] + term[2] + term[3]; }
};

// Quadrature geometry frozen for one base radius: node radii, dissipation
// rates and Leray weights precomputed once, reusable across tau0 and across
// fields. No divergence probe happens here, so r_max must already cover the
// field support; the apply_K wrappers run the probe.
class kinetic_nodes {
  public:
    kinetic_nodes(double s_abs, double r_max, const model_params& p,
                  const kinetic_options& opt);

    // tau0 may be +infinity, which evaluates every kernel at 1/gamma_1234
    kinetic_split apply(double tau0, const radial_fn& v) const;

    // one sweep for many fields; kernels are computed once per node
    std::vector<kinetic_split> apply_many(
        double tau0, const std::vector<radial_fn>& vs) const;

    double s_abs() const { return s_; }
    std::size_t size() const { return w_.size(); }

  private:
    double s_ = 0.0;
    double gamma_s_ = 1.0;
    double scale_ = 1.0;  // 4 C_d
    bool parallel_ = true;
    std::vector<double> a1_, a2_, a3_;  // site radii |s1|, |s2|, |s3|
    std::vector<double> g1_, g2_, g3_;  // their dissipation rates
    std::vector<double> w_;             // Leray quadrature weight
};

// K_s(tau0)(v); throws std::domain_error for d = 2 (no closed-form C_d) and
// when the integrand shows no decay at the truncation radius
double apply_K(double tau0, const radial_fn& v, double s_abs,
               const model_params& p, const kinetic_options& opt = {});
kinetic_split apply_K_split(double tau0, const radial_fn& v, double s_abs,
                            const model_params& p,
                            const kinetic_options& opt = {});
std::vector<kinetic_split> apply_K_split_many(
    double tau0, const std::vector<radial_fn>& vs, double s_abs,
    const model_params& p, const kinetic_options& opt = {});

// limiting operator: every kernel replaced by 1/gamma_1234, so constant
// fields cancel pointwise inside the bracket
double apply_K_inf(const radial_fn& v, double s_abs, const model_params& p,
                   const kinetic_options& opt = {});
kinetic_split apply_K_inf_split(const radial_fn& v, double s_abs,
                                const model_params& p,
                                const kinetic_options& opt = {});

// K^tau_s(tau0)(v) = (1 - e^{-2 gamma_s tau}) / (2 gamma_s) * K_s(tau0)(v);
// requires 0 < tau <= 1
double apply_K_tau(double tau, double tau0, const radial_fn& v, double s_abs,
                   const model_params& p, const kinetic_options& opt = {});

// K profile over base radii; each entry evaluated independently
std::vector<double> apply_K_profile(double tau0, const radial_fn& v,
                                    const std::vector<double>& s_abs,
                                    const model_params& p,
                                    const kinetic_options& opt = {});

// stationary linear spectrum n^(0)_s(tau0) = B_s (1 - e^{-2 gamma_s tau0});
// tau0 = +infinity gives B_s
double n0_spectrum(double abs_s, double tau0, const model_params& p);

struct x_lattice_options {
    double box = 0.0;  // |z_j| cut in frequency units; 0: from forcing decay
    int table = -1;    // weight-table resolution; -1 auto, 0 direct summation
    bool parallel = true;
};

// X_{s,L}(tau0, tau) = 4 L^{2(1-d)} tau * sum over resonant pairs of the
// kinetic bracket with n^(0)(tau0) in place of v. The table path, valid only
// at s = 0 where the bracket depends on (|z1|^2, |z2|^2) alone, interpolates
// a precomputed weight grid and is switched on automatically for large L.
double X_lattice(const std::vector<double>& s, double tau0, double tau,
                 double L, const model_params& p,
                 const x_lattice_options& opt = {});

}  // namespace wavekin
