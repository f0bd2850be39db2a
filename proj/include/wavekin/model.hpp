#pragma once

// Physical model data shared by every module: the dissipation spectrum
// gamma_s = gamma0(|s|^2), the Gaussian forcing profile b, the stationary
// coefficient B_s = b(s)^2 / gamma_s, the scaling rho = eps * L * chi_d(L),
// and the weighted sup-norms that measure decay of spectra and test
// functions.

#include <complex>
#include <functional>
#include <vector>

#include <json.hpp>

namespace wavekin {

// Radial Gaussian forcing b(s) = b0 * exp(-|s|^2 / (2 sigma^2)). b0 may be
// negative; only b^2 enters the dynamics.
struct forcing_profile {
    double b0 = 1.0;
    double sigma = 1.0;

    double operator()(double abs_s) const {
        return b0 * std::exp(-(abs_s * abs_s) / (2.0 * sigma * sigma));
    }
};

struct model_params {
    int d = 3;
    double L = 16.0;
    double r_star = 1.0;
    forcing_profile forcing;
    double epsilon = 0.1;
    // single multiplier c: gamma0(y) = max(1, c * (1+y)^{r_star})
    std::vector<double> gamma0_coeffs = {1.0};

    void validate() const;  // throws std::invalid_argument on bad fields
};

// dissipation profile; >= 1 and nondecreasing for any admissible params
double gamma0(double y, const model_params& p);
double gamma_abs(double abs_s, const model_params& p);
double gamma(const std::vector<double>& s, const model_params& p);

// stationary spectrum coefficient B_s = b(s)^2 / gamma_s
double B_coeff_abs(double abs_s, const model_params& p);
double B_coeff(const std::vector<double>& s, const model_params& p);

// chi_d(L) = 1 for d >= 3, (ln L)^{-1/2} for d = 2; rho = eps * L * chi_d
double chi_d(int d, double L);
double rho_scaling(const model_params& p);

// ---- weighted sup-norms ----------------------------------------------------

// field sampled on an explicit set of frequency points
struct spectral_sample {
    std::vector<double> z;
    std::complex<double> value;
};
using spectral_field = std::vector<spectral_sample>;

// |f|_r = sup over samples of |f(z)| * max(|z|,1)^r; empty field is an error
double weighted_norm(const spectral_field& f, double r);

// uniform evaluation grid along one axis; spacing() is the FD step
struct axis_grid {
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;

    double spacing() const { return n > 1 ? (hi - lo) / (n - 1) : 0.0; }
};

// ||f||_{n1,n2} = max over grid points and multi-indices |alpha| <= n1 of
// |D^alpha f(z)| * max(|z|,1)^{n2}, derivatives by central differences with
// the grid spacing. Throws if any axis has zero spacing.
double smooth_seminorm(
    const std::function<double(const std::vector<double>&)>& f, int n1,
    double n2, const std::vector<axis_grid>& grid);

// ---- JSON (de)serialization -------------------------------------------------

// accepts keys d, L, r_star, b0, sigma, epsilon, gamma0_coeffs; anything
// else is rejected so config typos cannot silently change a run
model_params params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const model_params& p);

}  // namespace wavekin
