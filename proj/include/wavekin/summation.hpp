#pragma once

// Deterministic floating-point accumulation. Every parallel reduction in the
// project sums fixed-size chunks whose partials are merged in chunk order, so
// the result is bit-identical for any thread count and any OpenMP schedule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace wavekin {

// Neumaier variant of compensated summation; safe when terms span many
// orders of magnitude in either direction.
struct neumaier_sum {
    double s = 0.0;
    double c = 0.0;

    void add(double x) {
        const double t = s + x;
        if (std::fabs(s) >= std::fabs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
    void add(const neumaier_sum& o) {
        add(o.s);
        add(o.c);
    }
    double value() const { return s + c; }
};

// Sums term(i) over i in [0, n). Chunk boundaries and merge order are fixed,
// so the value does not depend on `parallel` or on the thread count.
template <class Term>
double reduce_chunked(std::size_t n, Term&& term, bool parallel = true,
                      std::size_t chunk = 4096) {
    if (n == 0) return 0.0;
    const std::size_t nchunk = (n + chunk - 1) / chunk;
    std::vector<neumaier_sum> partial(nchunk);
    const long long m = static_cast<long long>(nchunk);
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
    for (long long ci = 0; ci < m; ++ci) {
        const std::size_t lo = static_cast<std::size_t>(ci) * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        neumaier_sum acc;
        for (std::size_t i = lo; i < hi; ++i) acc.add(term(i));
        partial[static_cast<std::size_t>(ci)] = acc;
    }
    neumaier_sum total;
    for (const auto& p : partial) total.add(p);
    return total.value();
}

// Vector-valued variant: emit(i, acc) adds the i-th contribution into the
// dim accumulators. Same fixed-chunk determinism guarantee as above.
template <class Emit>
std::vector<double> reduce_chunked_vec(std::size_t n, std::size_t dim,
                                       Emit&& emit, bool parallel = true,
                                       std::size_t chunk = 256) {
    const std::size_t nchunk = n == 0 ? 0 : (n + chunk - 1) / chunk;
    std::vector<std::vector<neumaier_sum>> partial(
        nchunk, std::vector<neumaier_sum>(dim));
    const long long m = static_cast<long long>(nchunk);
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
    for (long long ci = 0; ci < m; ++ci) {
        const std::size_t lo = static_cast<std::size_t>(ci) * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        auto& acc = partial[static_cast<std::size_t>(ci)];
        for (std::size_t i = lo; i < hi; ++i) emit(i, acc);
    }
    std::vector<neumaier_sum> total(dim);
    for (const auto& p : partial)
        for (std::size_t k = 0; k < dim; ++k) total[k].add(p[k]);
    std::vector<double> out(dim);
    for (std::size_t k = 0; k < dim; ++k) out[k] = total[k].value();
    return out;
}

}  // namespace wavekin
