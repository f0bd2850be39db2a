#pragma once

// Counter-based random numbers. Each draw is a pure function of the seed and
// up to four stream indices (site, sample, step, lane), so Monte Carlo runs
// are reproducible for any thread count and any loop order.

#include <cmath>
#include <complex>
#include <cstdint>
#include <utility>

namespace wavekin {

namespace detail {
// SplitMix64 finalizer; full avalanche on 64 bits.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

struct counter_rng {
    std::uint64_t seed = 0;

    std::uint64_t word(std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0, std::uint64_t d = 0) const {
        std::uint64_t z = detail::mix64(seed ^ 0x5EEDBA5E0DDBA11ull);
        z = detail::mix64(z ^ a);
        z = detail::mix64(z ^ b);
        z = detail::mix64(z ^ c);
        z = detail::mix64(z ^ d);
        return z;
    }

    // uniform on (0,1]; never returns 0, so log() is safe downstream
    double uniform(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                   std::uint64_t d = 0) const {
        return (static_cast<double>(word(a, b, c, d) >> 11) + 1.0) * 0x1p-53;
    }

    // independent standard normal pair via Box-Muller; lane indexes the pair
    std::pair<double, double> gaussian_pair(std::uint64_t a, std::uint64_t b,
                                            std::uint64_t c,
                                            std::uint64_t lane) const {
        const double u1 = uniform(a, b, c, 2 * lane);
        const double u2 = uniform(a, b, c, 2 * lane + 1);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * 3.14159265358979323846 * u2;
        return {rad * std::cos(ang), rad * std::sin(ang)};
    }

    // complex circular Gaussian with E|eta|^2 = var, E eta^2 = 0
    std::complex<double> circular_gaussian(double var, std::uint64_t a,
                                           std::uint64_t b, std::uint64_t c,
                                           std::uint64_t lane) const {
        const auto [g1, g2] = gaussian_pair(a, b, c, lane);
        const double amp = std::sqrt(0.5 * var);
        return {amp * g1, amp * g2};
    }
};

}  // namespace wavekin
