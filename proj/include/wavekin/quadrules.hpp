#pragma once

// One-dimensional quadrature shared by the kernel, surface, and kinetic
// modules. Gauss-Legendre nodes come from Newton iteration on the three-term
// recurrence and are cached per order.

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace wavekin {

struct quad_rule {
    std::vector<double> x;  // nodes on [-1,1], ascending
    std::vector<double> w;  // weights, sum to 2
};

inline quad_rule make_gauss_legendre(int n) {
    const double pi = 3.14159265358979323846;
    quad_rule r;
    r.x.assign(n, 0.0);
    r.w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double p1 = 1.0, dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            p1 = 1.0;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * x * p2 - j * p3) / (j + 1.0);
            }
            dp = n * (x * p1 - p2) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.w[i] = w;
        r.w[n - 1 - i] = w;
    }
    return r;
}

inline const quad_rule& gauss_legendre(int n) {
    static std::map<int, quad_rule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
    return it->second;
}

template <class F>
double integrate_gl(F&& f, double a, double b, int n) {
    const quad_rule& q = gauss_legendre(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += q.w[i] * f(mid + half * q.x[i]);
    return half * s;
}

namespace detail {
template <class F>
double adapt_rec(F& f, double a, double b, double tol, int depth) {
    const double coarse = integrate_gl(f, a, b, 12);
    const double fine = integrate_gl(f, a, b, 24);
    if (std::fabs(fine - coarse) <= tol || depth <= 0) return fine;
    const double mid = 0.5 * (a + b);
    return adapt_rec(f, a, mid, 0.5 * tol, depth - 1) +
           adapt_rec(f, mid, b, 0.5 * tol, depth - 1);
}
}  // namespace detail

// absolute-tolerance adaptive rule; integrands here are piecewise analytic
template <class F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol,
                          int max_depth = 40) {
    if (a == b) return 0.0;
    return detail::adapt_rec(f, a, b, abs_tol, max_depth);
}

}  // namespace wavekin
