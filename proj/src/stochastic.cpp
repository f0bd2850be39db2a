#include "wavekin/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "wavekin/summation.hpp"

namespace wavekin {

namespace {

using cplx = std::complex<double>;

// complex product without the Annex-G NaN recovery branch; the hot bracket
// loops spend nearly all their time here
inline cplx cmul(cplx x, cplx y) {
    return {x.real() * y.real() - x.imag() * y.imag(),
            x.real() * y.imag() + x.imag() * y.real()};
}

// noise stream key from the integer coordinates, so a site draws the same
// variates on every grid that contains it
std::uint64_t site_key(const ivec& m) {
    std::uint64_t k = 0x517E5EEDull;
    for (const long long c : m)
        k = detail::mix64(k ^ static_cast<std::uint64_t>(c + 0x40000000ll));
    return k;
}

void check_time_step(double h, const char* who) {
    if (!(h > 0.0) || !std::isfinite(h))
        throw std::invalid_argument(std::string(who) +
                                    ": h must be positive and finite");
}

void check_grid_match(const site_grid& g, const model_params& p,
                      const char* who) {
    if (g.d() != p.d || g.L() != p.L)
        throw std::invalid_argument(std::string(who) +
                                    ": grid and model disagree on (d, L)");
}

void check_field(const amplitude_field& f, const site_grid& g,
                 const char* who) {
    if (f.a.size() != g.size())
        throw std::invalid_argument(std::string(who) +
                                    ": field size does not match the grid");
}

struct site_rates {
    std::vector<double> gam, B;
    double gamma_min = 1.0;
};

site_rates rates_for(const site_grid& g, const model_params& p) {
    site_rates r;
    r.gam.resize(g.size());
    r.B.resize(g.size());
    r.gamma_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) {
        r.gam[i] = gamma_abs(g.abs_s(i), p);
        r.B[i] = B_coeff_abs(g.abs_s(i), p);
        r.gamma_min = std::min(r.gamma_min, r.gam[i]);
    }
    return r;
}

// Weights of the exponential trapezoid on one segment of length h:
// int_0^h e^{-gamma (h-u)} G(u) du with G linear in u equals
// w0 G(0) + w1 G(h). P0 and P1 are the moments of the kernel; the series
// branch avoids the (h - P0) cancellation when gamma h is tiny.
struct seg_weights {
    double w0, w1;
};

seg_weights segment_weights(double gam, double h) {
    const double x = gam * h;
    double P0, P1;
    if (x < 1e-3) {
        P0 = h * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0);
        P1 = h * h *
             (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0);
    } else {
        P0 = -std::expm1(-x) / gam;
        P1 = (h - P0) / gam;
    }
    return {P0 - P1 / h, P1 / h};
}

// G_s = sum over the table row of a_1 a_2 conj(a_3), minus the cubic self
// term when the full resonant nonlinearity is requested
void bracket1(const resonant_table& t, const std::vector<cplx>& a, bool self,
              std::vector<cplx>& out) {
    for (std::size_t s = 0; s < t.rows(); ++s) {
        cplx acc{};
        for (const auto& e : t.row(s))
            acc += cmul(cmul(a[e.i1], a[e.i2]), std::conj(a[e.i3]));
        if (self) acc -= std::norm(a[s]) * a[s];
        out[s] = acc;
    }
}

// same bracket with a^(1) substituted at each of the three slots in turn
void bracket2(const resonant_table& t, const std::vector<cplx>& a0,
              const std::vector<cplx>& a1, bool self,
              std::vector<cplx>& out) {
    for (std::size_t s = 0; s < t.rows(); ++s) {
        cplx acc{};
        for (const auto& e : t.row(s)) {
            const cplx c3 = std::conj(a0[e.i3]);
            acc += cmul(cmul(a1[e.i1], a0[e.i2]), c3);
            acc += cmul(cmul(a0[e.i1], a1[e.i2]), c3);
            acc += cmul(cmul(a0[e.i1], a0[e.i2]), std::conj(a1[e.i3]));
        }
        if (self)
            acc -= 2.0 * std::norm(a0[s]) * a1[s] +
                   cmul(cmul(a0[s], a0[s]), std::conj(a1[s]));
        out[s] = acc;
    }
}

double path_spacing(const std::vector<amplitude_field>& path,
                    const char* who) {
    if (path.size() < 2)
        throw std::invalid_argument(std::string(who) +
                                    ": path needs at least two points");
    const double h = path[1].tau - path[0].tau;
    check_time_step(h, who);
    return h;
}

void check_path(const std::vector<amplitude_field>& path, const site_grid& g,
                double h, const char* who) {
    if (path.empty())
        throw std::invalid_argument(std::string(who) + ": empty path");
    if (std::fabs(path[0].tau) > 1e-9)
        throw std::invalid_argument(std::string(who) +
                                    ": path must start at tau = 0");
    for (std::size_t k = 0; k < path.size(); ++k) {
        check_field(path[k], g, who);
        const double want = static_cast<double>(k) * h;
        if (std::fabs(path[k].tau - want) > 1e-9 * std::max(1.0, want))
            throw std::invalid_argument(std::string(who) +
                                        ": path grid is not uniform");
    }
}

std::size_t steps_for(double tau, double h, const char* who) {
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw std::invalid_argument(std::string(who) +
                                    ": tau must be finite and >= 0");
    const long long n = std::llround(tau / h);
    if (n < 0 || std::fabs(static_cast<double>(n) * h - tau) >
                     1e-9 * std::max(1.0, tau))
        throw std::invalid_argument(std::string(who) +
                                    ": tau must sit on the step grid");
    return static_cast<std::size_t>(n);
}

// shared core of duhamel_a1/a2: exponentially weighted sum of precomputed
// brackets, walked from the far end so the running decay factor only shrinks
amplitude_field duhamel_sum(const std::vector<std::vector<cplx>>& G,
                            std::size_t n, double h, const site_grid& g,
                            const site_rates& r, double tau) {
    amplitude_field out;
    out.tau = tau;
    out.a.assign(g.size(), cplx{});
    const double inv_Ld = std::pow(g.L(), -g.d());
    for (std::size_t s = 0; s < g.size(); ++s) {
        const seg_weights w = segment_weights(r.gam[s], h);
        const double f = std::exp(-r.gam[s] * h);
        double decay = 1.0;  // e^{-gamma (tau - l_{k+1})} at k = n-1
        cplx acc{};
        for (std::size_t k = n; k-- > 0;) {
            acc += decay * (w.w0 * G[k][s] + w.w1 * G[k + 1][s]);
            decay *= f;
        }
        out.a[s] = cplx(0.0, inv_Ld) * acc;
    }
    return out;
}

}  // namespace

// ---- site_grid ---------------------------------------------------------------

site_grid::site_grid(int d, long long M_cut, double L)
    : d_(d), M_(M_cut), L_(L) {
    if (d < 2) throw std::invalid_argument("site_grid: d must be >= 2");
    if (M_cut < 1)
        throw std::invalid_argument("site_grid: M_cut must be >= 1");
    if (!(L > 0.0) || !std::isfinite(L))
        throw std::invalid_argument("site_grid: L must be positive");
    const double side = static_cast<double>(2 * M_cut + 1);
    if (std::pow(side, d) > 16777216.0)
        throw std::invalid_argument("site_grid: grid would exceed 2^24 sites");
    const std::size_t n =
        static_cast<std::size_t>(std::llround(std::pow(side, d)));
    sites_.reserve(n);
    abs_s_.reserve(n);
    ivec m(static_cast<std::size_t>(d), -M_cut);
    while (true) {
        sites_.push_back(m);
        abs_s_.push_back(std::sqrt(static_cast<double>(inorm2(m))) / L_);
        int k = d - 1;
        while (k >= 0 && m[static_cast<std::size_t>(k)] == M_cut) {
            m[static_cast<std::size_t>(k)] = -M_cut;
            --k;
        }
        if (k < 0) break;
        ++m[static_cast<std::size_t>(k)];
    }
}

bool site_grid::on_grid(const ivec& m) const {
    return m.size() == static_cast<std::size_t>(d_) && inorm_inf(m) <= M_;
}

std::size_t site_grid::index(const ivec& m) const {
    if (!on_grid(m))
        throw std::invalid_argument("site_grid: site is off the grid");
    const std::size_t side = static_cast<std::size_t>(2 * M_ + 1);
    std::size_t idx = 0;
    for (const long long c : m)
        idx = idx * side + static_cast<std::size_t>(c + M_);
    return idx;
}

// ---- resonant_table ----------------------------------------------------------

resonant_table::resonant_table(const site_grid& g) {
    rows_.resize(g.size());
    const long long M = g.M_cut();
    ivec m2, m3;
    for (std::size_t si = 0; si < g.size(); ++si) {
        const ivec& m = g.site(si);
        for (std::size_t i1 = 0; i1 < g.size(); ++i1) {
            const ivec& m1 = g.site(i1);
            ivec z1(m1.size());
            for (std::size_t j = 0; j < m1.size(); ++j) z1[j] = m1[j] - m[j];
            if (is_zero_vec(z1)) continue;
            // z2 ranges over the z1-orthogonal sublattice; |z2|_inf <= 2M
            // covers every candidate since both m2 and m lie in the box
            for (const ivec& z2 : enumerate_orthogonal(z1, 2 * M)) {
                m2.resize(m.size());
                m3.resize(m.size());
                for (std::size_t j = 0; j < m.size(); ++j) {
                    m2[j] = m[j] + z2[j];
                    m3[j] = m1[j] + z2[j];
                }
                if (!g.on_grid(m2) || !g.on_grid(m3)) continue;
                // z1, z2 != 0 already force {s1, s2} and {s3, s} disjoint
                if (m1 == m3 || m2 == m3)
                    throw std::runtime_error(
                        "resonant_table: disjointness invariant broken");
                rows_[si].push_back({static_cast<std::uint32_t>(i1),
                                     static_cast<std::uint32_t>(g.index(m2)),
                                     static_cast<std::uint32_t>(g.index(m3))});
            }
        }
    }
}

resonant_table resonant_table::from_rows(
    std::vector<std::vector<entry>> rows, const site_grid& g) {
    if (rows.size() != g.size())
        throw std::invalid_argument(
            "resonant_table: row count does not match the grid");
    for (std::size_t si = 0; si < rows.size(); ++si) {
        const ivec& m = g.site(si);
        for (const entry& e : rows[si]) {
            if (e.i1 >= g.size() || e.i2 >= g.size() || e.i3 >= g.size())
                throw std::invalid_argument(
                    "resonant_table: entry index out of range");
            const ivec& m1 = g.site(e.i1);
            const ivec& m2 = g.site(e.i2);
            const ivec& m3 = g.site(e.i3);
            ivec z1(m.size()), z2(m.size());
            bool sum_ok = true;
            for (std::size_t j = 0; j < m.size(); ++j) {
                z1[j] = m1[j] - m[j];
                z2[j] = m2[j] - m[j];
                sum_ok = sum_ok && (m3[j] == m1[j] + m2[j] - m[j]);
            }
            if (!sum_ok || is_zero_vec(z1) || is_zero_vec(z2) ||
                idot(z1, z2) != 0)
                throw std::invalid_argument(
                    "resonant_table: entry violates the resonance "
                    "constraints");
        }
    }
    resonant_table t;
    t.rows_ = std::move(rows);
    return t;
}

const std::vector<resonant_table::entry>& resonant_table::row(
    std::size_t s_index) const {
    if (s_index >= rows_.size())
        throw std::invalid_argument("resonant_table: row index out of range");
    return rows_[s_index];
}

std::size_t resonant_table::total_entries() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
}

nlohmann::json table_to_json(const resonant_table& t, const site_grid& g) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t si = 0; si < t.rows(); ++si) {
        nlohmann::json flat = nlohmann::json::array();
        for (const auto& e : t.row(si)) {
            flat.push_back(e.i1);
            flat.push_back(e.i2);
            flat.push_back(e.i3);
        }
        rows.push_back(std::move(flat));
    }
    return nlohmann::json{{"d", g.d()},
                          {"M_cut", g.M_cut()},
                          {"L", g.L()},
                          {"rows", std::move(rows)}};
}

resonant_table table_from_json(const nlohmann::json& j, const site_grid& g) {
    if (j.at("d").get<int>() != g.d() ||
        j.at("M_cut").get<long long>() != g.M_cut() ||
        j.at("L").get<double>() != g.L())
        throw std::invalid_argument(
            "resonant_table: serialized grid does not match");
    const auto& rows_json = j.at("rows");
    std::vector<std::vector<resonant_table::entry>> rows(rows_json.size());
    for (std::size_t si = 0; si < rows_json.size(); ++si) {
        const auto& flat = rows_json[si];
        if (flat.size() % 3 != 0)
            throw std::invalid_argument(
                "resonant_table: serialized row length not a multiple of 3");
        for (std::size_t k = 0; k + 3 <= flat.size(); k += 3)
            rows[si].push_back({flat[k].get<std::uint32_t>(),
                                flat[k + 1].get<std::uint32_t>(),
                                flat[k + 2].get<std::uint32_t>()});
    }
    return resonant_table::from_rows(std::move(rows), g);
}

// ---- OU update ---------------------------------------------------------------

amplitude_field ou_step(const amplitude_field& a, double h,
                        const site_grid& g, const model_params& p,
                        const counter_rng& rng, std::uint64_t sample,
                        std::uint64_t step) {
    check_time_step(h, "ou_step");
    check_grid_match(g, p, "ou_step");
    check_field(a, g, "ou_step");
    amplitude_field out;
    out.tau = a.tau + h;
    out.a.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double gam = gamma_abs(g.abs_s(i), p);
        const double var =
            B_coeff_abs(g.abs_s(i), p) * (-std::expm1(-2.0 * gam * h));
        out.a[i] = std::exp(-gam * h) * a.a[i] +
                   rng.circular_gaussian(var, site_key(g.site(i)), sample,
                                         step, 0);
    }
    return out;
}

// ---- Duhamel integrals -------------------------------------------------------

duhamel_result duhamel_a1(const std::vector<amplitude_field>& a0_path,
                          double tau, const site_grid& g,
                          const resonant_table& t, const model_params& p,
                          bool self_term) {
    check_grid_match(g, p, "duhamel_a1");
    if (t.rows() != g.size())
        throw std::invalid_argument(
            "duhamel_a1: table does not match the grid");
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw std::invalid_argument(
            "duhamel_a1: tau must be finite and >= 0");
    duhamel_result res;
    if (tau == 0.0) {
        // empty integration range; any nonempty path will do
        if (a0_path.empty() || a0_path[0].a.size() != g.size())
            throw std::invalid_argument("duhamel_a1: empty path");
        res.field.tau = 0.0;
        res.field.a.assign(g.size(), cplx{});
        return res;
    }
    const double h = path_spacing(a0_path, "duhamel_a1");
    check_path(a0_path, g, h, "duhamel_a1");
    const std::size_t n = steps_for(tau, h, "duhamel_a1");
    if (n + 1 > a0_path.size())
        throw std::invalid_argument("duhamel_a1: path does not reach tau");
    res.coarse_path = h > 0.1;
    std::vector<std::vector<cplx>> G(n + 1,
                                     std::vector<cplx>(g.size()));
    for (std::size_t k = 0; k <= n; ++k)
        bracket1(t, a0_path[k].a, self_term, G[k]);
    res.field = duhamel_sum(G, n, h, g, rates_for(g, p), tau);
    return res;
}

duhamel_result duhamel_a2(const std::vector<amplitude_field>& a0_path,
                          const std::vector<amplitude_field>& a1_path,
                          double tau, const site_grid& g,
                          const resonant_table& t, const model_params& p,
                          bool self_term) {
    check_grid_match(g, p, "duhamel_a2");
    if (t.rows() != g.size())
        throw std::invalid_argument(
            "duhamel_a2: table does not match the grid");
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw std::invalid_argument(
            "duhamel_a2: tau must be finite and >= 0");
    duhamel_result res;
    if (tau == 0.0) {
        if (a0_path.empty() || a0_path[0].a.size() != g.size())
            throw std::invalid_argument("duhamel_a2: empty path");
        res.field.tau = 0.0;
        res.field.a.assign(g.size(), cplx{});
        return res;
    }
    const double h = path_spacing(a0_path, "duhamel_a2");
    check_path(a0_path, g, h, "duhamel_a2");
    check_path(a1_path, g, h, "duhamel_a2");
    if (a1_path.size() < a0_path.size())
        throw std::invalid_argument(
            "duhamel_a2: a1 path shorter than a0 path");
    const std::size_t n = steps_for(tau, h, "duhamel_a2");
    if (n + 1 > a0_path.size())
        throw std::invalid_argument("duhamel_a2: path does not reach tau");
    res.coarse_path = h > 0.1;
    std::vector<std::vector<cplx>> G(n + 1,
                                     std::vector<cplx>(g.size()));
    for (std::size_t k = 0; k <= n; ++k)
        bracket2(t, a0_path[k].a, a1_path[k].a, self_term, G[k]);
    res.field = duhamel_sum(G, n, h, g, rates_for(g, p), tau);
    return res;
}

// ---- streamed path -----------------------------------------------------------

chaos_path::chaos_path(const site_grid& g, const resonant_table& t,
                       const model_params& p, double h, bool self_term,
                       const counter_rng& rng, std::uint64_t sample,
                       int max_order)
    : g_(&g),
      t_(&t),
      self_(self_term),
      order_(max_order),
      h_(h),
      rng_(rng),
      sample_(sample) {
    check_time_step(h, "chaos_path");
    check_grid_match(g, p, "chaos_path");
    if (t.rows() != g.size())
        throw std::invalid_argument(
            "chaos_path: table does not match the grid");
    if (max_order < 0 || max_order > 2)
        throw std::invalid_argument(
            "chaos_path: max_order must be 0, 1 or 2");
    inv_Ld_ = std::pow(g.L(), -g.d());
    const site_rates r = rates_for(g, p);
    decay_.resize(g.size());
    nvar_.resize(g.size());
    w0_.resize(g.size());
    w1_.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        decay_[i] = std::exp(-r.gam[i] * h);
        nvar_[i] = r.B[i] * (-std::expm1(-2.0 * r.gam[i] * h));
        const seg_weights w = segment_weights(r.gam[i], h);
        w0_[i] = w.w0;
        w1_[i] = w.w1;
    }
    a0_.a.assign(g.size(), cplx{});
    if (order_ >= 1) {
        a1_.a.assign(g.size(), cplx{});
        G1_.assign(g.size(), cplx{});
    }
    if (order_ >= 2) {
        a2_.a.assign(g.size(), cplx{});
        G2_.assign(g.size(), cplx{});
    }
    scratch_.resize(g.size());
}

void chaos_path::advance() {
    ++step_;
    tau_ = h_ * static_cast<double>(step_);
    const std::size_t ns = g_->size();
    for (std::size_t i = 0; i < ns; ++i)
        a0_.a[i] = decay_[i] * a0_.a[i] +
                   rng_.circular_gaussian(nvar_[i], site_key(g_->site(i)),
                                          sample_, step_, 0);
    a0_.tau = tau_;
    if (order_ >= 1) {
        bracket1(*t_, a0_.a, self_, scratch_);
        for (std::size_t i = 0; i < ns; ++i)
            a1_.a[i] = decay_[i] * a1_.a[i] +
                       cmul(cplx(0.0, inv_Ld_),
                            w0_[i] * G1_[i] + w1_[i] * scratch_[i]);
        std::swap(G1_, scratch_);
        a1_.tau = tau_;
    }
    if (order_ >= 2) {
        bracket2(*t_, a0_.a, a1_.a, self_, scratch_);
        for (std::size_t i = 0; i < ns; ++i)
            a2_.a[i] = decay_[i] * a2_.a[i] +
                       cmul(cplx(0.0, inv_Ld_),
                            w0_[i] * G2_[i] + w1_[i] * scratch_[i]);
        std::swap(G2_, scratch_);
        a2_.tau = tau_;
    }
}

const amplitude_field& chaos_path::a1() const {
    if (order_ < 1)
        throw std::invalid_argument("chaos_path: a1 was not streamed");
    return a1_;
}

const amplitude_field& chaos_path::a2() const {
    if (order_ < 2)
        throw std::invalid_argument("chaos_path: a2 was not streamed");
    return a2_;
}

amplitude_field chaos_path::quasisolution(double rho) const {
    if (!std::isfinite(rho))
        throw std::invalid_argument("chaos_path: rho must be finite");
    amplitude_field out;
    out.tau = tau_;
    out.a = a0_.a;
    if (order_ >= 1)
        for (std::size_t i = 0; i < out.a.size(); ++i)
            out.a[i] += rho * a1_.a[i];
    if (order_ >= 2)
        for (std::size_t i = 0; i < out.a.size(); ++i)
            out.a[i] += rho * rho * a2_.a[i];
    return out;
}

// ---- Monte Carlo orchestration -----------------------------------------------

namespace {

// argument validation must run before the table build, the costly part
const model_params& validated(const model_params& p, double h) {
    p.validate();
    check_time_step(h, "quasisolution_mc");
    return p;
}

}  // namespace

quasisolution_mc::quasisolution_mc(const model_params& p, long long M_cut,
                                   double h, bool self_term,
                                   std::uint64_t seed)
    : params_(validated(p, h)),
      grid_(p.d, M_cut, p.L),
      table_(grid_),
      h_(h),
      self_(self_term),
      seed_(seed) {}

double quasisolution_mc::stationary_tau() const {
    return 10.0 / rates_for(grid_, params_).gamma_min;
}

namespace {

// mean and standard error from streamed (sum, sum of squares) pairs
mc_estimate finish_estimate(double sum, double sumsq, std::size_t n,
                            std::uint64_t seed) {
    mc_estimate e;
    e.count = n;
    e.seed = seed;
    e.mean = sum / static_cast<double>(n);
    const double var =
        std::max(0.0, (sumsq - static_cast<double>(n) * e.mean * e.mean) /
                          static_cast<double>(n - 1));
    e.std_error = std::sqrt(var / static_cast<double>(n));
    return e;
}

void check_samples(std::size_t n_samples, const char* who) {
    if (n_samples < 2)
        throw std::invalid_argument(std::string(who) +
                                    ": need at least 2 samples");
}

void check_eps(double eps, const char* who) {
    if (!(eps >= 0.0) || eps > 0.5)
        throw std::invalid_argument(std::string(who) +
                                    ": eps must lie in [0, 1/2]");
}

}  // namespace

spectrum_estimate quasisolution_mc::spectrum(double tau,
                                             std::size_t n_samples,
                                             double eps,
                                             bool parallel) const {
    check_samples(n_samples, "quasisolution_mc::spectrum");
    check_eps(eps, "quasisolution_mc::spectrum");
    const std::size_t n_steps = steps_for(tau, h_, "quasisolution_mc");
    const std::size_t ns = grid_.size();
    const double lchi = params_.L * chi_d(params_.d, params_.L);
    const double rho = eps * lchi;
    const counter_rng rng{seed_};
    // 6 statistics per site, each carrying (sum, sum of squares)
    const std::size_t dim = ns * 12;
    const std::vector<double> acc = reduce_chunked_vec(
        n_samples, dim,
        [&](std::size_t sample, std::vector<neumaier_sum>& out) {
            chaos_path path(grid_, table_, params_, h_, self_, rng, sample,
                            2);
            for (std::size_t k = 0; k < n_steps; ++k) path.advance();
            const auto& a0 = path.a0().a;
            const auto& a1 = path.a1().a;
            const auto& a2 = path.a2().a;
            for (std::size_t i = 0; i < ns; ++i) {
                const cplx A =
                    a0[i] + rho * a1[i] + rho * rho * a2[i];
                const double x[6] = {
                    std::norm(A),
                    std::norm(a0[i]),
                    2.0 * (a0[i] * std::conj(a1[i])).real() * lchi,
                    (std::norm(a1[i]) +
                     2.0 * (a0[i] * std::conj(a2[i])).real()) *
                        lchi * lchi,
                    2.0 * (a1[i] * std::conj(a2[i])).real() * lchi *
                        lchi * lchi,
                    std::norm(a2[i]) * lchi * lchi * lchi * lchi};
                for (std::size_t q = 0; q < 6; ++q) {
                    out[i * 12 + 2 * q].add(x[q]);
                    out[i * 12 + 2 * q + 1].add(x[q] * x[q]);
                }
            }
        },
        parallel, 16);
    spectrum_estimate est;
    est.tau = tau;
    est.eps = eps;
    est.rho = rho;
    est.n.resize(ns);
    for (auto& v : est.n_k) v.resize(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        est.n[i] = finish_estimate(acc[i * 12], acc[i * 12 + 1], n_samples,
                                   seed_);
        for (std::size_t k = 0; k < 5; ++k)
            est.n_k[k][i] =
                finish_estimate(acc[i * 12 + 2 * (k + 1)],
                                acc[i * 12 + 2 * (k + 1) + 1], n_samples,
                                seed_);
    }
    return est;
}

low_moment_estimate quasisolution_mc::low_moments(double tau,
                                                  std::size_t n_samples,
                                                  bool parallel) const {
    check_samples(n_samples, "quasisolution_mc::low_moments");
    const std::size_t n_steps = steps_for(tau, h_, "quasisolution_mc");
    const std::size_t ns = grid_.size();
    const double lchi = params_.L * chi_d(params_.d, params_.L);
    const counter_rng rng{seed_};
    const std::size_t dim = ns * 6;
    const std::vector<double> acc = reduce_chunked_vec(
        n_samples, dim,
        [&](std::size_t sample, std::vector<neumaier_sum>& out) {
            chaos_path path(grid_, table_, params_, h_, self_, rng, sample,
                            1);
            for (std::size_t k = 0; k < n_steps; ++k) path.advance();
            const auto& a0 = path.a0().a;
            const auto& a1 = path.a1().a;
            for (std::size_t i = 0; i < ns; ++i) {
                const double x[3] = {
                    std::norm(a0[i]),
                    2.0 * (a0[i] * std::conj(a1[i])).real() * lchi,
                    std::norm(a1[i])};
                for (std::size_t q = 0; q < 3; ++q) {
                    out[i * 6 + 2 * q].add(x[q]);
                    out[i * 6 + 2 * q + 1].add(x[q] * x[q]);
                }
            }
        },
        parallel, 16);
    low_moment_estimate est;
    est.tau = tau;
    est.n0.resize(ns);
    est.n1.resize(ns);
    est.a1_sq.resize(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        est.n0[i] = finish_estimate(acc[i * 6], acc[i * 6 + 1], n_samples,
                                    seed_);
        est.n1[i] = finish_estimate(acc[i * 6 + 2], acc[i * 6 + 3],
                                    n_samples, seed_);
        est.a1_sq[i] = finish_estimate(acc[i * 6 + 4], acc[i * 6 + 5],
                                       n_samples, seed_);
    }
    return est;
}

// ---- closed forms and the effective SDE --------------------------------------

std::vector<double> a1_stationary_closed_form(const site_grid& g,
                                              const resonant_table& t,
                                              const model_params& p) {
    check_grid_match(g, p, "a1_stationary_closed_form");
    if (t.rows() != g.size())
        throw std::invalid_argument(
            "a1_stationary_closed_form: table does not match the grid");
    const site_rates r = rates_for(g, p);
    const double pref = std::pow(g.L(), -2.0 * g.d());
    std::vector<double> out(g.size());
    for (std::size_t s = 0; s < g.size(); ++s) {
        neumaier_sum acc;
        for (const auto& e : t.row(s))
            acc.add(r.B[e.i1] * r.B[e.i2] * r.B[e.i3] /
                    (r.gam[e.i1] + r.gam[e.i2] + r.gam[e.i3] + r.gam[s]));
        out[s] = 2.0 / r.gam[s] * pref * acc.value();
    }
    return out;
}

amplitude_field effective_sde_step(const amplitude_field& a, double h,
                                   double rho, const site_grid& g,
                                   const resonant_table& t,
                                   const model_params& p,
                                   const counter_rng& rng,
                                   std::uint64_t sample,
                                   std::uint64_t step) {
    check_time_step(h, "effective_sde_step");
    check_grid_match(g, p, "effective_sde_step");
    check_field(a, g, "effective_sde_step");
    if (!std::isfinite(rho) || rho < 0.0)
        throw std::invalid_argument(
            "effective_sde_step: rho must be finite and >= 0");
    if (t.rows() != g.size())
        throw std::invalid_argument(
            "effective_sde_step: table does not match the grid");
    const site_rates r = rates_for(g, p);
    const double inv_Ld = std::pow(g.L(), -g.d());
    std::vector<cplx> Y(g.size());
    bracket1(t, a.a, true, Y);
    amplitude_field out;
    out.tau = a.tau + h;
    out.a.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double gam = r.gam[i];
        const double P0 = -std::expm1(-gam * h) / gam;
        const double var = r.B[i] * (-std::expm1(-2.0 * gam * h));
        out.a[i] = std::exp(-gam * h) * a.a[i] +
                   cmul(cplx(0.0, rho * P0 * inv_Ld), Y[i]) +
                   rng.circular_gaussian(var, site_key(g.site(i)), sample,
                                         step, 0);
        // the nonlinear rotation per step must stay well under one radian,
        // or the explicit term is outside its stability region
        if (!std::isfinite(out.a[i].real()) ||
            !std::isfinite(out.a[i].imag()) ||
            h * rho * std::norm(out.a[i]) > 1.0)
            throw std::domain_error(
                "effective_sde_step: step size too large");
    }
    return out;
}

void write_spectrum_csv(const site_grid& g,
                        const std::vector<mc_estimate>& est,
                        const std::vector<double>* reference,
                        std::ostream& os) {
    if (est.size() != g.size() ||
        (reference && reference->size() != g.size()))
        throw std::invalid_argument(
            "write_spectrum_csv: column size does not match the grid");
    os << "abs_s,mean,stderr";
    if (reference) os << ",reference";
    os << "\n";
    const auto prec = os.precision(12);
    for (std::size_t i = 0; i < g.size(); ++i) {
        os << g.abs_s(i) << "," << est[i].mean << "," << est[i].std_error;
        if (reference) os << "," << (*reference)[i];
        os << "\n";
    }
    os.precision(prec);
}

}  // namespace wavekin
