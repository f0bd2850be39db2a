#include "wavekin/radial_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wavekin {

namespace {

// Fritsch-Carlson knot slopes: harmonic-mean blend of adjacent secants,
// zeroed at local extrema. The resulting Hermite cubic is monotone on every
// interval whose data is monotone.
std::vector<double> monotone_slopes(const std::vector<double>& r,
                                    const std::vector<double>& v) {
    const std::size_t n = r.size();
    std::vector<double> h(n - 1), del(n - 1), d(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = r[i + 1] - r[i];
        del[i] = (v[i + 1] - v[i]) / h[i];
    }
    if (n == 2) {
        d[0] = d[1] = del[0];
        return d;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (del[i - 1] * del[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    // one-sided ends with the standard shape-preserving clamps
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0)
            s = 0.0;
        else if (d0 * d1 < 0.0 && std::fabs(s) > 3.0 * std::fabs(d0))
            s = 3.0 * d0;
        return s;
    };
    d[0] = end_slope(h[0], h[1], del[0], del[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    return d;
}

}  // namespace

radial_field::radial_field(std::vector<double> radii,
                           std::vector<double> values)
    : r_(std::move(radii)), v_(std::move(values)) {
    if (r_.size() < 2 || r_.size() != v_.size())
        throw std::invalid_argument("radial_field: need >= 2 matching knots");
    if (r_.front() != 0.0)
        throw std::invalid_argument("radial_field: first knot must sit at 0");
    for (std::size_t i = 0; i + 1 < r_.size(); ++i)
        if (!(r_[i] < r_[i + 1]))
            throw std::invalid_argument(
                "radial_field: knot radii must increase strictly");
    for (double x : v_)
        if (!std::isfinite(x))
            throw std::invalid_argument("radial_field: values must be finite");
    slope_ = monotone_slopes(r_, v_);
}

double radial_field::operator()(double r) const {
    if (r_.empty()) throw std::logic_error("radial_field: empty field");
    r = std::fabs(r);
    if (r > r_.back()) return 0.0;
    if (r == r_.back()) return v_.back();
    const std::size_t k = static_cast<std::size_t>(
        std::upper_bound(r_.begin(), r_.end(), r) - r_.begin() - 1);
    const double h = r_[k + 1] - r_[k];
    const double t = (r - r_[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return v_[k] * (2.0 * t3 - 3.0 * t2 + 1.0) +
           slope_[k] * h * (t3 - 2.0 * t2 + t) +
           v_[k + 1] * (3.0 * t2 - 2.0 * t3) + slope_[k + 1] * h * (t3 - t2);
}

std::vector<double> log_knots(int n, double r_max, double r_min) {
    if (n < 2 || !(r_max > 0.0))
        throw std::invalid_argument("log_knots: need n >= 2 and r_max > 0");
    if (r_min <= 0.0) r_min = r_max / 100.0;
    if (!(r_min < r_max))
        throw std::invalid_argument("log_knots: need r_min < r_max");
    std::vector<double> r(static_cast<std::size_t>(n));
    r[0] = 0.0;
    const double ratio = r_min / r_max;
    for (int i = 1; i < n - 1; ++i)
        r[static_cast<std::size_t>(i)] =
            r_max * std::pow(ratio, static_cast<double>(n - 1 - i) /
                                        static_cast<double>(n - 2));
    r[static_cast<std::size_t>(n - 1)] = r_max;
    return r;
}

double weighted_sup(const radial_field& f, double w) {
    if (f.empty()) return 0.0;
    const auto& r = f.radii();
    double best = 0.0;
    auto probe = [&](double x) {
        const double v = std::fabs(f(x)) * std::pow(std::max(1.0, x), w);
        if (v > best) best = v;
    };
    for (std::size_t k = 0; k + 1 < r.size(); ++k) {
        probe(r[k]);
        for (int j = 1; j < 8; ++j)
            probe(r[k] + (r[k + 1] - r[k]) * (j / 8.0));
    }
    probe(r.back());
    return best;
}

}  // namespace wavekin
