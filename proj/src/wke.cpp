#include "wavekin/wke.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace wavekin {

namespace {

// ratio behind the a-priori bound |z|_r <= C_r |b^2|_r; both sups sit at
// the origin where gamma = 1, and the measured ratio stays within 1.03
// for eps up to 0.3, frozen with headroom
constexpr double z_over_drive_bound = 1.25;

bool all_zero(const radial_field& f) {
    for (double v : f.values())
        if (v != 0.0) return false;
    return true;
}

void check_step(double h, const char* who) {
    if (!(h > 0.0) || !(h <= 0.5))
        throw std::invalid_argument(std::string(who) +
                                    ": step must lie in (0, 1/2]");
}

}  // namespace

wke_solver::wke_solver(const model_params& p, const wke_options& opt)
    : params_(p), opt_(opt) {
    params_.validate();
    if (params_.d != 3)
        throw std::invalid_argument(
            "wke_solver: collision quadrature supports d = 3 only");
    check_step(opt_.h, "wke_solver");
    if (!(opt_.eps >= 0.0) || !std::isfinite(opt_.eps))
        throw std::invalid_argument("wke_solver: eps must be finite and >= 0");
    if (opt_.n_radii < 2)
        throw std::invalid_argument("wke_solver: need at least 2 radii");
    if (opt_.r_max == 0.0) opt_.r_max = 8.0 * params_.forcing.sigma;
    if (!(opt_.r_max > 0.0) || !std::isfinite(opt_.r_max))
        throw std::invalid_argument("wke_solver: r_max must be positive");
    if (opt_.r_norm == 0.0) opt_.r_norm = params_.d + 2.0;

    radii_ = log_knots(opt_.n_radii, opt_.r_max);
    gam_.resize(radii_.size());
    b2_.resize(radii_.size());
    for (std::size_t i = 0; i < radii_.size(); ++i) {
        gam_[i] = gamma_abs(radii_[i], params_);
        const double b = params_.forcing(radii_[i]);
        b2_[i] = b * b;
        if (opt_.drive_extra) b2_[i] += opt_.drive_extra(radii_[i]);
        if (!std::isfinite(b2_[i]))
            throw std::invalid_argument("wke_solver: drive is not finite");
    }
    b2_norm_ = field_norm(radial_field(radii_, b2_));

    // solver fields vanish beyond the outermost knot, and every bracket
    // term carries two field factors, which bounds both integration radii
    // by s + r_max; the truncation is exact, not a decay estimate
    kinetic_options ko = opt_.kin;
    ko.parallel = false;  // parallelism lives across base points instead
    nodes_.reserve(radii_.size());
    for (const double s : radii_)
        nodes_.emplace_back(s, s + opt_.r_max, params_, ko);
}

radial_field wke_solver::linear_solution(double tau) const {
    if (!(tau >= 0.0))
        throw std::invalid_argument("linear_solution: tau must be >= 0");
    std::vector<double> vals(radii_.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
        vals[i] = b2_[i] / gam_[i] * (-std::expm1(-2.0 * gam_[i] * tau));
    return radial_field(radii_, vals);
}

wke_state wke_solver::initial_state() const {
    wke_state st;
    st.tau = 0.0;
    st.z = radial_field(radii_, std::vector<double>(radii_.size(), 0.0));
    st.eps = opt_.eps;
    st.h = opt_.h;
    return st;
}

std::vector<double> wke_solver::collision(double tau0,
                                          const radial_field& z) const {
    // same precondition the kernel layer enforces, checked here so the
    // throw happens outside the parallel region
    if (std::isnan(tau0) || tau0 <= 0.0)
        throw std::invalid_argument(
            "apply_K: tau0 must be positive (or +infinity)");
    std::vector<double> out(radii_.size(), 0.0);
    const radial_fn fn = [&z](double r) { return z(r); };
    const int n = static_cast<int>(radii_.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            nodes_[static_cast<std::size_t>(i)].apply(tau0, fn).total();
    return out;
}

wke_state wke_solver::step(const wke_state& st) const {
    check_step(st.h, "wke_step");
    if (!(st.tau >= 0.0) || !std::isfinite(st.tau))
        throw std::invalid_argument("wke_step: tau must be finite and >= 0");
    if (!(st.eps >= 0.0) || !std::isfinite(st.eps))
        throw std::invalid_argument("wke_step: eps must be finite and >= 0");
    if (st.z.empty())
        throw std::invalid_argument("wke_step: state carries no field");

    // a zero field has zero collision term by cubic homogeneity, which also
    // covers the very first step, where tau0 = 0 leaves the kernels undefined
    std::vector<double> kv;
    const bool need_kinetic = st.eps != 0.0 && !all_zero(st.z);
    if (need_kinetic) kv = collision(st.tau, st.z);

    const double e2 = st.eps * st.eps;
    std::vector<double> vals(radii_.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const double g = gam_[i];
        const double decay = std::exp(-2.0 * g * st.h);
        const double om = -std::expm1(-2.0 * g * st.h);
        vals[i] = decay * st.z(radii_[i]) + b2_[i] / g * om;
        if (need_kinetic) vals[i] += e2 * om / (2.0 * g) * kv[i];
    }

    wke_state out;
    out.tau = st.tau + st.h;
    out.z = radial_field(radii_, vals);
    out.eps = st.eps;
    out.h = st.h;
    out.norm_history = st.norm_history;
    out.norm_history.push_back(field_norm(out.z));
    return out;
}

wke_trajectory wke_solver::run(double T, double h, double eps) const {
    if (!(T >= 0.0) || !std::isfinite(T))
        throw std::invalid_argument("wke_solver: T must be finite and >= 0");
    check_step(h, "wke_solver");

    wke_state st = initial_state();
    st.h = h;
    st.eps = eps;

    wke_trajectory tr;
    auto record = [&](const wke_state& s, double norm) {
        tr.taus.push_back(s.tau);
        tr.states.push_back(s.z);
        tr.norms.push_back(norm);
        tr.sup_norm = std::max(tr.sup_norm, norm);
        for (const double v : s.z.values())
            tr.min_value = std::min(tr.min_value, v);
    };
    record(st, field_norm(st.z));

    const double threshold = blowup_threshold();
    while (st.tau + 1e-9 * h < T) {
        st.h = std::min(h, T - st.tau);
        st = step(st);
        record(st, st.norm_history.back());
        if (tr.norms.back() > threshold)
            throw std::domain_error("wke_solver: outside small-eps regime");
    }
    return tr;
}

wke_trajectory wke_solver::solve(double T, double h) const {
    return run(T, h, opt_.eps);
}

radial_field wke_solver::stationary(
    double eps, std::vector<double>* residual_history) const {
    if (!(eps >= 0.0) || !std::isfinite(eps))
        throw std::invalid_argument(
            "stationary: eps must be finite and >= 0");
    if (residual_history) residual_history->clear();

    std::vector<double> z(radii_.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = b2_[i] / gam_[i];
    if (eps == 0.0) return radial_field(radii_, z);

    const double e2 = eps * eps;
    const double inf = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        bool finite = true;
        for (const double v : z)
            if (!std::isfinite(v)) finite = false;
        if (!finite) break;  // diverged; report non-contraction below

        const radial_field zf(radii_, z);
        const std::vector<double> kv = collision(inf, zf);
        for (const double v : kv)
            if (!std::isfinite(v)) finite = false;
        if (!finite) break;

        std::vector<double> res(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            res[i] = 2.0 * gam_[i] * z[i] - e2 * kv[i] - 2.0 * b2_[i];
        const double rnorm = field_norm(radial_field(radii_, res));
        if (residual_history) residual_history->push_back(rnorm);
        if (rnorm <= 1e-10) return zf;

        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] = b2_[i] / gam_[i] + e2 * kv[i] / (2.0 * gam_[i]);
    }
    throw std::domain_error(
        "wke_solver: stationary iteration fails to contract; eps too large");
}

double wke_solver::contraction_threshold(double lo, double hi,
                                         int rounds) const {
    if (!(lo > 0.0) || !(hi >= lo))
        throw std::invalid_argument(
            "contraction_threshold: need 0 < lo <= hi");
    auto contracts = [&](double e) {
        try {
            stationary(e);
            return true;
        } catch (const std::domain_error&) {
            return false;
        }
    };
    if (contracts(hi)) return hi;
    if (!contracts(lo)) return 0.0;
    double good = lo, bad = hi;
    for (int r = 0; r < rounds; ++r) {
        const double mid = std::sqrt(good * bad);
        (contracts(mid) ? good : bad) = mid;
    }
    return good;
}

long_time_report wke_solver::long_time_check(double eps, double T) const {
    if (!(T > 0.0) || !std::isfinite(T))
        throw std::invalid_argument(
            "long_time_check: T must be finite and positive");
    const radial_field zs = stationary(eps);
    const wke_trajectory tr = run(T, opt_.h, eps);

    long_time_report rep;
    rep.taus = tr.taus;
    rep.residuals.resize(tr.taus.size());
    std::vector<double> diff(radii_.size());
    for (std::size_t k = 0; k < tr.taus.size(); ++k) {
        const auto& v = tr.states[k].values();
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] = v[i] - zs.values()[i];
        rep.residuals[k] = field_norm(radial_field(radii_, diff));
    }

    const double e2 = eps * eps;
    if (eps > 0.0) {
        for (std::size_t k = 0; k < rep.taus.size(); ++k)
            if (rep.taus[k] >= 0.5 * T)
                rep.C2 = std::max(rep.C2, rep.residuals[k] / e2);
    }
    for (std::size_t k = 0; k < rep.taus.size(); ++k)
        if (rep.taus[k] <= std::min(2.0, T))
            rep.C1 = std::max(
                rep.C1, (rep.residuals[k] - rep.C2 * e2) *
                            std::exp(rep.taus[k]));
    rep.C1 = std::max(rep.C1, 0.0);

    rep.envelopes.resize(rep.taus.size());
    rep.within = true;
    for (std::size_t k = 0; k < rep.taus.size(); ++k) {
        rep.envelopes[k] = rep.C1 * std::exp(-rep.taus[k]) + rep.C2 * e2;
        if (rep.residuals[k] > rep.envelopes[k] * (1.0 + 1e-9) + 1e-15)
            rep.within = false;
    }
    return rep;
}

double wke_solver::field_norm(const radial_field& f) const {
    return weighted_sup(f, opt_.r_norm);
}

double wke_solver::blowup_threshold() const {
    return 10.0 * z_over_drive_bound * b2_norm_;
}

void write_trajectory_csv(const wke_trajectory& tr, std::ostream& os) {
    os << "tau,znorm";
    if (!tr.states.empty())
        for (const double r : tr.states.front().radii())
            os << ",z@" << std::setprecision(6) << r;
    os << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < tr.taus.size(); ++k) {
        os << tr.taus[k] << ',' << tr.norms[k];
        for (const double v : tr.states[k].values()) os << ',' << v;
        os << '\n';
    }
}

nlohmann::json run_manifest(const wke_solver& solver,
                            const wke_trajectory& tr) {
    const wke_options& o = solver.options();
    nlohmann::json j;
    j["model"] = params_to_json(solver.params());
    j["options"] = {{"h", o.h},
                    {"eps", o.eps},
                    {"n_radii", o.n_radii},
                    {"r_max", o.r_max},
                    {"r_norm", o.r_norm},
                    {"kin_radial", o.kin.radial},
                    {"kin_polar", o.kin.polar},
                    {"kin_plane_angle", o.kin.plane_angle},
                    {"drive_extra", static_cast<bool>(o.drive_extra)}};
    j["radii"] = solver.radii();
    j["steps"] = tr.taus.empty() ? 0 : tr.taus.size() - 1;
    j["final_tau"] = tr.taus.empty() ? 0.0 : tr.taus.back();
    j["final_norm"] = tr.norms.empty() ? 0.0 : tr.norms.back();
    j["sup_norm"] = tr.sup_norm;
    j["min_value"] = tr.min_value;
    j["drive_norm"] = solver.drive_norm();
    j["blowup_threshold"] = solver.blowup_threshold();
    return j;
}

}  // namespace wavekin
