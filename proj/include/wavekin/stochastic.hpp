#pragma once

// Monte Carlo construction of the amplitude hierarchy on the truncated grid
// |m|_inf <= M_cut: the base process a^(0) advanced by the exact
// Ornstein-Uhlenbeck update, the Duhamel iterates a^(1) and a^(2) driven by
// the exact resonant interaction table, the quadratic quasisolution
// A = a^(0) + rho a^(1) + rho^2 a^(2) with rho = eps L chi_d(L), and
// estimators for the energy spectrum E|A_s|^2 and its decomposition in eps.
//
// Randomness flows through counter streams keyed by (site coordinates,
// sample, step). Keying by coordinates rather than grid index means the same
// site draws the same noise on any grid that contains it, so runs at
// different M_cut or L can be coupled pathwise.

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "wavekin/lattice.hpp"
#include "wavekin/model.hpp"
#include "wavekin/rng.hpp"

namespace wavekin {

// dense row-major index over the integer grid {m in Z^d : |m|_inf <= M_cut};
// the frequency site is s = m / L
class site_grid {
  public:
    site_grid(int d, long long M_cut, double L);

    int d() const { return d_; }
    long long M_cut() const { return M_; }
    double L() const { return L_; }
    std::size_t size() const { return sites_.size(); }

    bool on_grid(const ivec& m) const;
    std::size_t index(const ivec& m) const;  // throws when off-grid
    const ivec& site(std::size_t i) const { return sites_[i]; }
    double abs_s(std::size_t i) const { return abs_s_[i]; }

  private:
    int d_ = 2;
    long long M_ = 1;
    double L_ = 2.0;
    std::vector<ivec> sites_;
    std::vector<double> abs_s_;
};

// complex amplitudes over one site_grid at one instant
struct amplitude_field {
    double tau = 0.0;
    std::vector<std::complex<double>> a;
};

// For every base site s, the ordered pairs (s1, s2) with s3 = s1 + s2 - s
// on-grid, s1 != s, s2 != s and (s1 - s).(s2 - s) = 0, found in exact
// integer arithmetic. These exclusions force {s1, s2} and {s3, s} disjoint,
// which the builder asserts entry by entry. Rows are symmetric under the
// (s1, s2) swap and do not depend on L.
class resonant_table {
  public:
    struct entry {
        std::uint32_t i1, i2, i3;
    };

    explicit resonant_table(const site_grid& g);

    // rebuilds from serialized rows, revalidating every entry against the
    // grid constraints; the cache layer relies on the validation to detect
    // corrupt files
    static resonant_table from_rows(std::vector<std::vector<entry>> rows,
                                    const site_grid& g);

    const std::vector<entry>& row(std::size_t s_index) const;
    std::size_t rows() const { return rows_.size(); }
    std::size_t total_entries() const;

  private:
    resonant_table() = default;

    std::vector<std::vector<entry>> rows_;
};

nlohmann::json table_to_json(const resonant_table& t, const site_grid& g);
resonant_table table_from_json(const nlohmann::json& j, const site_grid& g);

// exact-in-law Ornstein-Uhlenbeck update over time h at every site:
// a <- e^{-gamma h} a + eta with circular complex eta,
// E|eta|^2 = B_s (1 - e^{-2 gamma h}); from rest this reproduces
// E|a_s(tau)|^2 = B_s (1 - e^{-2 gamma tau}) exactly on the step grid
amplitude_field ou_step(const amplitude_field& a, double h,
                        const site_grid& g, const model_params& p,
                        const counter_rng& rng, std::uint64_t sample,
                        std::uint64_t step);

// Duhamel integrals of the decomposition from rest. The bracket at one
// instant is
//   G_s = sum_{(s1,s2,s3) in row(s)} a_1 a_2 conj(a_3)
//         - [self_term] |a_s|^2 a_s,
// the full resonant nonlinearity when self_term is set and the approximate
// a-equation variant without it. The factor e^{-gamma_s (tau - l)} is
// integrated exactly against a linear interpolant of the bracket on each
// path segment, so the quadrature stays uniform in gamma h.
struct duhamel_result {
    amplitude_field field;
    bool coarse_path = false;  // path spacing exceeded 0.1
};

// a^(1)_s(tau) = i L^{-d} int_0^tau e^{-gamma_s (tau-l)} G_s(a^(0)(l)) dl;
// the path must start at tau = 0 and tau must sit on its grid
duhamel_result duhamel_a1(const std::vector<amplitude_field>& a0_path,
                          double tau, const site_grid& g,
                          const resonant_table& t, const model_params& p,
                          bool self_term);

// second iterate: the bracket sums the three placements of a^(1) in the
// cubic term; a1_path must sit on the same time grid as a0_path
duhamel_result duhamel_a2(const std::vector<amplitude_field>& a0_path,
                          const std::vector<amplitude_field>& a1_path,
                          double tau, const site_grid& g,
                          const resonant_table& t, const model_params& p,
                          bool self_term);

// One Monte Carlo path of the hierarchy, advanced step by step. The streamed
// a^(1), a^(2) use the same segment weights as duhamel_a1/a2, so running
// either routine over the stored a^(0) path reproduces the streamed fields
// up to rounding. max_order in {0, 1, 2} bounds which iterates are carried.
class chaos_path {
  public:
    chaos_path(const site_grid& g, const resonant_table& t,
               const model_params& p, double h, bool self_term,
               const counter_rng& rng, std::uint64_t sample,
               int max_order = 2);

    void advance();  // one step of every streamed order
    double tau() const { return tau_; }
    std::uint64_t step() const { return step_; }
    double h() const { return h_; }

    const amplitude_field& a0() const { return a0_; }
    const amplitude_field& a1() const;  // throws when max_order < 1
    const amplitude_field& a2() const;  // throws when max_order < 2

    // a^(0) + rho a^(1) + rho^2 a^(2), truncated at the streamed order
    amplitude_field quasisolution(double rho) const;

  private:
    const site_grid* g_;
    const resonant_table* t_;
    bool self_ = true;
    int order_ = 2;
    double h_ = 0.02;
    double inv_Ld_ = 1.0;
    counter_rng rng_;
    std::uint64_t sample_ = 0;
    std::uint64_t step_ = 0;
    double tau_ = 0.0;
    // per-site rates and segment weights, frozen at construction
    std::vector<double> decay_, nvar_, w0_, w1_;
    amplitude_field a0_, a1_, a2_;
    std::vector<std::complex<double>> G1_, G2_, scratch_;
};

// mean and standard error = sample standard deviation / sqrt(count)
struct mc_estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
    std::uint64_t seed = 0;
};

// per-site energy spectrum estimate and its decomposition in eps:
// n approximates E|A_s|^2 and n_k[k], k = 0..4, the terms
// (L chi_d)^k sum_{k1+k2=k} E a^(k1)_s conj(a^(k2)_s); per sample the
// identity |A|^2 = sum_k eps^k (n_k[k] contribution) is exact, so the
// estimates satisfy it to rounding
struct spectrum_estimate {
    double tau = 0.0;
    double eps = 0.0;
    double rho = 0.0;
    std::vector<mc_estimate> n;
    std::array<std::vector<mc_estimate>, 5> n_k;
};

// estimates from the first two chaos orders only: n0 = E|a^(0)|^2,
// n1 = L chi_d * 2 Re E a^(0) conj(a^(1)), and a1_sq = E|a^(1)|^2 for the
// stationary closed-form comparison
struct low_moment_estimate {
    double tau = 0.0;
    std::vector<mc_estimate> n0, n1, a1_sq;
};

// Orchestrates independent sample paths. Estimates are accumulated through
// the fixed-chunk ordered reduction, so they are bit-identical for any
// thread count; the sample index is the only per-path state.
class quasisolution_mc {
  public:
    quasisolution_mc(const model_params& p, long long M_cut, double h,
                     bool self_term, std::uint64_t seed);

    const site_grid& grid() const { return grid_; }
    const resonant_table& table() const { return table_; }
    const model_params& params() const { return params_; }
    double h() const { return h_; }

    // stationary proxy time 10 / min gamma
    double stationary_tau() const;

    // full spectrum with the a^(2) stream; eps may be 0, in which case the
    // quasisolution reduces to a^(0)
    spectrum_estimate spectrum(double tau, std::size_t n_samples, double eps,
                               bool parallel = true) const;

    // a^(0) and a^(1) moments only; roughly a quarter of the flops of
    // spectrum at equal samples
    low_moment_estimate low_moments(double tau, std::size_t n_samples,
                                    bool parallel = true) const;

  private:
    model_params params_;
    site_grid grid_;
    resonant_table table_;
    double h_ = 0.02;
    bool self_ = true;
    std::uint64_t seed_ = 0;
};

// exact lattice second moment of the stationary first iterate without the
// self term,
//   E|a^(1)_s(inf)|^2 = (2 / gamma_s) L^{-2d}
//     sum_{row(s)} B_1 B_2 B_3 / (gamma_1 + gamma_2 + gamma_3 + gamma_s)
std::vector<double> a1_stationary_closed_form(const site_grid& g,
                                              const resonant_table& t,
                                              const model_params& p);

// One semi-implicit Euler-Maruyama step of the effective equation
// d a_s = (-gamma_s a_s + i rho Y^res_s(a)) dtau + b(s) dbeta_s: the linear
// and noise parts use the exact OU update, the resonant nonlinearity (self
// term included) enters explicitly with the weight (1 - e^{-gamma h})/gamma.
// The scheme is accurate for h <~ 1e-2 min(1, 1/(rho sup|a|^2)); a step
// that leaves that regime throws std::domain_error("... step size too
// large") instead of returning a blown-up field.
amplitude_field effective_sde_step(const amplitude_field& a, double h,
                                   double rho, const site_grid& g,
                                   const resonant_table& t,
                                   const model_params& p,
                                   const counter_rng& rng,
                                   std::uint64_t sample, std::uint64_t step);

// CSV columns |s|, mean, stderr and, when provided, the closed-form
// reference value per site
void write_spectrum_csv(const site_grid& g,
                        const std::vector<mc_estimate>& est,
                        const std::vector<double>* reference,
                        std::ostream& os);

}  // namespace wavekin
