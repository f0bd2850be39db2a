#include "wavekin/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace wavekin {

namespace {

double abs2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double bracket_weight(double abs_z, double r) {
    return std::pow(std::max(abs_z, 1.0), r);
}

}  // namespace

void model_params::validate() const {
    if (d < 2) throw std::invalid_argument("model_params: d must be >= 2");
    if (!(L >= 2.0)) throw std::invalid_argument("model_params: L must be >= 2");
    if (!(r_star > 0.0))
        throw std::invalid_argument("model_params: r_star must be positive");
    if (!(forcing.sigma > 0.0))
        throw std::invalid_argument("model_params: sigma must be positive");
    if (!(epsilon > 0.0) || !(epsilon <= 0.5))
        throw std::invalid_argument("model_params: epsilon must lie in (0, 1/2]");
    if (!gamma0_coeffs.empty() && !(gamma0_coeffs[0] > 0.0))
        throw std::invalid_argument(
            "model_params: gamma0 coefficient must be positive");
}

double gamma0(double y, const model_params& p) {
    const double c = p.gamma0_coeffs.empty() ? 1.0 : p.gamma0_coeffs[0];
    return std::max(1.0, c * std::pow(1.0 + y, p.r_star));
}

double gamma_abs(double abs_s, const model_params& p) {
    return gamma0(abs_s * abs_s, p);
}

double gamma(const std::vector<double>& s, const model_params& p) {
    return gamma0(abs2(s), p);
}

double B_coeff_abs(double abs_s, const model_params& p) {
    const double b = p.forcing(abs_s);
    return b * b / gamma_abs(abs_s, p);
}

double B_coeff(const std::vector<double>& s, const model_params& p) {
    return B_coeff_abs(std::sqrt(abs2(s)), p);
}

double chi_d(int d, double L) {
    if (d >= 3) return 1.0;
    return 1.0 / std::sqrt(std::log(L));
}

double rho_scaling(const model_params& p) {
    return p.epsilon * p.L * chi_d(p.d, p.L);
}

double weighted_norm(const spectral_field& f, double r) {
    if (f.empty())
        throw std::invalid_argument("weighted_norm: field has no grid points");
    double sup = 0.0;
    for (const auto& s : f) {
        const double w = bracket_weight(std::sqrt(abs2(s.z)), r);
        sup = std::max(sup, std::abs(s.value) * w);
    }
    return sup;
}

namespace {

// D^alpha f at z by recursive central differences; h[i] is the grid spacing
double central_derivative(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<int>& alpha, std::vector<double>& z,
    const std::vector<double>& h) {
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (alpha[i] > 0) {
            alpha[i] -= 1;
            z[i] += h[i];
            const double fp = central_derivative(f, alpha, z, h);
            z[i] -= 2.0 * h[i];
            const double fm = central_derivative(f, alpha, z, h);
            z[i] += h[i];
            alpha[i] += 1;
            return (fp - fm) / (2.0 * h[i]);
        }
    }
    return f(z);
}

template <class Visit>
void walk_multi_indices(std::vector<int>& alpha, std::size_t axis, int budget,
                        Visit&& visit) {
    if (axis == alpha.size()) {
        visit(alpha);
        return;
    }
    for (int k = 0; k <= budget; ++k) {
        alpha[axis] = k;
        walk_multi_indices(alpha, axis + 1, budget - k, visit);
    }
    alpha[axis] = 0;
}

}  // namespace

double smooth_seminorm(
    const std::function<double(const std::vector<double>&)>& f, int n1,
    double n2, const std::vector<axis_grid>& grid) {
    if (n1 < 0) throw std::invalid_argument("smooth_seminorm: n1 must be >= 0");
    if (grid.empty())
        throw std::invalid_argument("smooth_seminorm: empty grid");
    std::vector<double> h(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        h[i] = grid[i].spacing();
        if (!(h[i] > 0.0))
            throw std::invalid_argument("smooth_seminorm: grid spacing zero");
    }

    const std::size_t dim = grid.size();
    std::vector<int> idx(dim, 0);
    std::vector<double> z(dim);
    double sup = 0.0;
    for (;;) {
        for (std::size_t i = 0; i < dim; ++i) z[i] = grid[i].lo + idx[i] * h[i];
        const double w = bracket_weight(std::sqrt(abs2(z)), n2);

        std::vector<int> alpha(dim, 0);
        walk_multi_indices(alpha, 0, n1, [&](std::vector<int>& a) {
            std::vector<double> zz = z;
            const double da = central_derivative(f, a, zz, h);
            sup = std::max(sup, std::fabs(da) * w);
        });

        std::size_t axis = 0;
        while (axis < dim && ++idx[axis] == grid[axis].n) {
            idx[axis] = 0;
            ++axis;
        }
        if (axis == dim) break;
    }
    return sup;
}

model_params params_from_json(const nlohmann::json& j) {
    static const char* known[] = {"d",     "L",       "r_star",       "b0",
                                  "sigma", "epsilon", "gamma0_coeffs"};
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || (item.key() == k);
        if (!ok)
            throw std::invalid_argument("model_params: unknown key \"" +
                                        item.key() + "\"");
    }
    model_params p;
    if (j.contains("d")) p.d = j.at("d").get<int>();
    if (j.contains("L")) p.L = j.at("L").get<double>();
    if (j.contains("r_star")) p.r_star = j.at("r_star").get<double>();
    if (j.contains("b0")) p.forcing.b0 = j.at("b0").get<double>();
    if (j.contains("sigma")) p.forcing.sigma = j.at("sigma").get<double>();
    if (j.contains("epsilon")) p.epsilon = j.at("epsilon").get<double>();
    if (j.contains("gamma0_coeffs"))
        p.gamma0_coeffs = j.at("gamma0_coeffs").get<std::vector<double>>();
    p.validate();
    return p;
}

nlohmann::json params_to_json(const model_params& p) {
    return nlohmann::json{{"d", p.d},
                          {"L", p.L},
                          {"r_star", p.r_star},
                          {"b0", p.forcing.b0},
                          {"sigma", p.forcing.sigma},
                          {"epsilon", p.epsilon},
                          {"gamma0_coeffs", p.gamma0_coeffs}};
}

}  // namespace wavekin
