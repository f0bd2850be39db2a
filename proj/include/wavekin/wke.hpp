#pragma once

// Exponential integrator for the damped/driven radial kinetic flow
//
//   d z_s / d tau = -2 gamma_s z_s + 2 b(s)^2 + eps^2 K_s(tau)(z),  z(0) = 0,
//
// advanced by the increment map
//
//   z(tau + h) = e^{-h La} z(tau) + 2 int_0^h e^{-t La} b^2 dt
//                + eps^2 K^h(tau)(z(tau)),       (La v)(s) = 2 gamma_s v(s).
//
// Both linear pieces are diagonal in |s| and evaluated in closed form, so
// the scheme is exact when eps = 0; the collision term is frozen at the
// left endpoint, which is first order in h. The stationary state solves
// z = La^{-1}(2 b^2 + eps^2 K(inf)(z)) by fixed-point iteration from the
// linear steady state b^2 / gamma.

#include <functional>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "wavekin/kinetic.hpp"
#include "wavekin/model.hpp"
#include "wavekin/radial_field.hpp"

namespace wavekin {

struct wke_options {
    double h = 0.05;    // default step, must lie in (0, 1/2]
    double eps = 0.1;   // forcing amplitude of the collision term
    int n_radii = 24;   // log-spaced knots of the output grid
    double r_max = 0.0;   // outermost knot; 0 picks 8 sigma
    double r_norm = 0.0;  // weight exponent of |.|_r; 0 picks d + 2
    // collision-term quadrature, coarser than the kinetic defaults because
    // the term enters at order eps^2; r_max and parallel are overridden per
    // base point (the solver parallelizes across base points instead)
    kinetic_options kin{24, 8, 12};
    // additive drive term xi(|s|) on top of b^2, for response studies
    std::function<double(double)> drive_extra;
};

// snapshot of the flow; norm_history carries |z|_r after every step taken
// from the initial state onward
struct wke_state {
    double tau = 0.0;
    radial_field z;
    double eps = 0.1;
    double h = 0.05;
    std::vector<double> norm_history;
};

struct wke_trajectory {
    std::vector<double> taus;
    std::vector<radial_field> states;
    std::vector<double> norms;  // |z|_r per entry
    double sup_norm = 0.0;
    double min_value = 0.0;  // most negative knot value seen, 0 if none
};

// residuals |z(tau) - z_eps|_r against the envelope C1 e^{-tau} + C2 eps^2;
// C2 is fitted on the tail half of the run and C1 on tau <= 2 only, so the
// "within" flag is an actual check on the rows in between
struct long_time_report {
    std::vector<double> taus;
    std::vector<double> residuals;
    std::vector<double> envelopes;
    double C1 = 0.0;
    double C2 = 0.0;
    bool within = false;
};

class wke_solver {
  public:
    explicit wke_solver(const model_params& p, const wke_options& opt = {});

    const std::vector<double>& radii() const { return radii_; }
    const model_params& params() const { return params_; }
    const wke_options& options() const { return opt_; }

    // closed form of the eps = 0 flow, (b^2/gamma)(1 - e^{-2 gamma tau})
    radial_field linear_solution(double tau) const;

    wke_state initial_state() const;

    // one increment of length state.h; a zero field contributes no
    // collision term, otherwise kernel-domain errors propagate
    wke_state step(const wke_state& state) const;

    // integrates on [0, T] recording every step; throws std::domain_error
    // once |z|_r crosses blowup_threshold()
    wke_trajectory solve(double T, double h) const;
    wke_trajectory solve(double T) const { return solve(T, opt_.h); }

    // fixed point of z = La^{-1}(2 b^2 + eps^2 K(inf)(z)) with residual
    // |La z - eps^2 K(inf)(z) - 2 b^2|_r <= 1e-10; throws std::domain_error
    // after 200 iterations without contraction; residual_history, when
    // given, receives the residual norm of every iterate
    radial_field stationary(double eps,
                            std::vector<double>* residual_history
                            = nullptr) const;

    // largest eps in [lo, hi] where stationary() still contracts, located
    // by geometric bisection; 0 when even lo fails
    double contraction_threshold(double lo = 0.05, double hi = 1.6,
                                 int rounds = 6) const;

    long_time_report long_time_check(double eps, double T) const;

    // |f|_r with the solver's weight exponent
    double field_norm(const radial_field& f) const;

    double drive_norm() const { return b2_norm_; }  // |b^2 + xi|_r
    double blowup_threshold() const;                // 10 C_r |b^2|_r

  private:
    std::vector<double> collision(double tau0, const radial_field& z) const;
    wke_trajectory run(double T, double h, double eps) const;

    model_params params_;
    wke_options opt_;
    std::vector<double> radii_;
    std::vector<double> gam_;  // gamma at each knot
    std::vector<double> b2_;   // effective drive b^2 + xi at each knot
    std::vector<kinetic_nodes> nodes_;  // frozen geometry, one per knot
    double b2_norm_ = 0.0;
};

// one row per recorded time: tau, |z|_r, then z at every knot
void write_trajectory_csv(const wke_trajectory& tr, std::ostream& os);

// model, options, grid and summary statistics of a finished run
nlohmann::json run_manifest(const wke_solver& solver,
                            const wke_trajectory& tr);

}  // namespace wavekin
