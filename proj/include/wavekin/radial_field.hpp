#pragma once

// Radial spectra v(|s|) stored as values on an increasing knot grid starting
// at 0, evaluated anywhere through a monotone cubic (Fritsch-Carlson)
// interpolant and extended by zero beyond the last knot. Monotone data never
// overshoots, so nonnegative spectra stay nonnegative between knots.

#include <vector>

namespace wavekin {

class radial_field {
  public:
    radial_field() = default;

    // knots must start at 0, increase strictly, and carry finite values;
    // knot values are reproduced exactly
    radial_field(std::vector<double> radii, std::vector<double> values);

    // evaluation uses |r| only; returns 0 beyond the last knot, so a field
    // meant for quadrature should decay to ~0 there
    double operator()(double r) const;

    const std::vector<double>& radii() const { return r_; }
    const std::vector<double>& values() const { return v_; }
    double support_radius() const { return r_.empty() ? 0.0 : r_.back(); }
    bool empty() const { return r_.empty(); }

  private:
    std::vector<double> r_, v_, slope_;
};

// n knots on [0, r_max]: knot 0 at the origin, the rest log-spaced from
// r_min up to r_max so short-scale structure near 0 stays resolved
std::vector<double> log_knots(int n, double r_max, double r_min = 0.0);

// sup of |f(r)| max(1, r)^w over the knots and a dense subsample of every
// segment; zero for an empty field
double weighted_sup(const radial_field& f, double w);

}  // namespace wavekin
