#include "wavekin/quadric.hpp"

#include <cmath>
#include <stdexcept>

namespace wavekin {

void int_polynomial::add_term(long long c, std::vector<int> expo) {
    if (c == 0) return;
    if (static_cast<int>(expo.size()) != vars)
        throw std::invalid_argument("int_polynomial: exponent arity mismatch");
    for (auto& t : terms)
        if (t.expo == expo) {
            t.c += c;
            if (t.c == 0) {
                t = terms.back();
                terms.pop_back();
            }
            return;
        }
    terms.push_back({c, std::move(expo)});
}

int int_polynomial::total_degree() const {
    int deg = 0;
    for (const auto& t : terms) {
        int s = 0;
        for (int e : t.expo) s += e;
        deg = std::max(deg, s);
    }
    return deg;
}

long long int_polynomial::eval(const std::vector<long long>& x) const {
    if (static_cast<int>(x.size()) != vars)
        throw std::invalid_argument("int_polynomial: point arity mismatch");
    long long sum = 0;
    for (const auto& t : terms) {
        long long m = t.c;
        for (int i = 0; i < vars; ++i)
            for (int e = 0; e < t.expo[i]; ++e) m *= x[i];
        sum += m;
    }
    return sum;
}

long long int_polynomial::eval_mod(const std::vector<long long>& x,
                                   long long p) const {
    if (static_cast<int>(x.size()) != vars)
        throw std::invalid_argument("int_polynomial: point arity mismatch");
    long long sum = 0;
    for (const auto& t : terms) {
        long long m = ((t.c % p) + p) % p;
        for (int i = 0; i < vars; ++i) {
            const long long xi = ((x[i] % p) + p) % p;
            for (int e = 0; e < t.expo[i]; ++e) m = (m * xi) % p;
        }
        sum = (sum + m) % p;
    }
    return sum;
}

std::vector<int_polynomial> quadric_system(const incidence_matrix& alpha,
                                           const ivec& z1, const ivec& v) {
    alpha.validate();
    const int N = alpha.N;
    if (N < 3 || N > 4)
        throw std::invalid_argument("quadric_system: N must be 3 or 4");
    const int d = static_cast<int>(z1.size());
    if (static_cast<int>(v.size()) != d)
        throw std::invalid_argument("quadric_system: z1 and v arity mismatch");
    const int e = alpha.a[0][N - 1];
    if (e == 0)
        throw std::invalid_argument(
            "quadric_system: incidence entry (1,N) must be nonzero for the "
            "elimination of z_N");

    const int vars = (N - 2) * d;
    std::vector<int_polynomial> polys;
    for (int j = 1; j <= N - 2; ++j) {
        int_polynomial q;
        q.vars = vars;
        // linear part: z_j . (a_{j1} z1 + e a_{jN} v)
        for (int t = 0; t < d; ++t) {
            const long long c = alpha.a[j][0] * z1[t] +
                                static_cast<long long>(e) * alpha.a[j][N - 1] * v[t];
            std::vector<int> expo(vars, 0);
            expo[(j - 1) * d + t] = 1;
            q.add_term(c, std::move(expo));
        }
        // quadratic part: z_j . sum_i (a_{ji} - e a_{jN} a_{1i}) z_i
        for (int i = 1; i <= N - 2; ++i) {
            const long long B =
                alpha.a[j][i] -
                static_cast<long long>(e) * alpha.a[j][N - 1] * alpha.a[0][i];
            if (B == 0) continue;
            for (int t = 0; t < d; ++t) {
                std::vector<int> expo(vars, 0);
                expo[(j - 1) * d + t] += 1;
                expo[(i - 1) * d + t] += 1;
                q.add_term(B, std::move(expo));
            }
        }
        polys.push_back(std::move(q));
    }
    return polys;
}

quadric_count_result quadric_intersection_count(const incidence_matrix& alpha,
                                                const ivec& z1, const ivec& v,
                                                double R, double L) {
    alpha.validate();
    const int N = alpha.N;
    if (N < 2 || N > 4)
        throw std::invalid_argument(
            "quadric_intersection_count: N must be 2, 3 or 4");
    if (!alpha.irreducible())
        throw std::invalid_argument(
            "quadric_intersection_count: incidence matrix must be irreducible");
    if (is_zero_vec(z1) || is_zero_vec(v))
        throw std::invalid_argument(
            "quadric_intersection_count: z1 and v must be nonzero");
    if (idot(z1, v) != 0)
        throw std::invalid_argument(
            "quadric_intersection_count: hypothesis (z1, v) in Q^0_1 violated");
    if (R < 0 || L < 1)
        throw std::invalid_argument(
            "quadric_intersection_count: need R >= 0 and L >= 1");

    const int d = static_cast<int>(z1.size());
    const long long M = static_cast<long long>(std::floor(R * L));
    quadric_count_result res;
    res.bound = std::pow(2.0, (N - 2) * d) *
                std::pow(std::max(N * R * L, 1.0),
                         static_cast<double>((N - 2) * (d - 1)));

    if (N == 2) {
        // nothing left to eliminate; the empty tuple is the single point
        res.count = 1;
        res.ratio = 1.0 / res.bound;
        return res;
    }

    const auto polys = quadric_system(alpha, z1, v);
    const int vars = (N - 2) * d;
    const double total = std::pow(2.0 * M + 1.0, vars);
    if (total > 2e8)
        throw std::invalid_argument(
            "quadric_intersection_count: box too large for exact count");

    std::vector<long long> x(vars, -M);
    unsigned long long count = 0;
    for (;;) {
        bool zero = true;
        for (const auto& q : polys)
            if (q.eval(x) != 0) {
                zero = false;
                break;
            }
        if (zero) ++count;
        int axis = 0;
        while (axis < vars && ++x[axis] > M) {
            x[axis] = -M;
            ++axis;
        }
        if (axis == vars) break;
    }
    res.count = count;
    res.ratio = static_cast<double>(count) / res.bound;
    return res;
}

namespace {

bool is_prime(long long p) {
    if (p < 2) return false;
    for (long long q = 2; q * q <= p; ++q)
        if (p % q == 0) return false;
    return true;
}

}  // namespace

finite_field_result finite_field_count(const std::vector<int_polynomial>& polys,
                                       long long p, int m) {
    if (!is_prime(p))
        throw std::invalid_argument("finite_field_count: p must be prime");
    if (m < 1)
        throw std::invalid_argument("finite_field_count: need m >= 1");
    double total = 1;
    for (int i = 0; i < m; ++i) total *= static_cast<double>(p);
    if (total > 1e9)
        throw std::invalid_argument(
            "finite_field_count: p^m too large for exact count");
    for (const auto& q : polys)
        if (q.vars != m)
            throw std::invalid_argument(
                "finite_field_count: polynomial arity mismatch");

    std::vector<long long> x(m, 0);
    unsigned long long count = 0;
    for (;;) {
        bool zero = true;
        for (const auto& q : polys)
            if (q.eval_mod(x, p) != 0) {
                zero = false;
                break;
            }
        if (zero) ++count;
        int axis = 0;
        while (axis < m && ++x[axis] == p) {
            x[axis] = 0;
            ++axis;
        }
        if (axis == m) break;
    }

    const int r = std::max(0, m - static_cast<int>(polys.size()));
    double bound = 1;
    for (int i = 0; i < r; ++i) bound *= static_cast<double>(p);
    for (const auto& q : polys) bound *= std::max(1, q.total_degree());
    return {count, bound};
}

}  // namespace wavekin
