// Small dense vector/matrix helpers used throughout the library.  Dimensions
// here are tiny (d <= a few dozen), so plain std::vector<double> and O(d^3)
// solves are the right tool.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "ssldro/errors.hpp"

namespace ssldro {

using vec = std::vector<double>;

inline double dot(const vec& a, const vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// y += alpha * x
inline void axpy(double alpha, const vec& x, vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(vec& x, double alpha) {
    for (double& v : x) v *= alpha;
}

inline double norm2(const vec& x) {
    return std::sqrt(dot(x, x));
}

inline double norm1(const vec& x) {
    double s = 0.0;
    for (double v : x) s += std::fabs(v);
    return s;
}

inline double norm_inf(const vec& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::fabs(v));
    return m;
}

// l_q norm for q >= 1; q = infinity gives the max norm.
inline double norm_q(const vec& x, double q) {
    if (!(q >= 1.0)) throw config_error("norm_q: order must be >= 1");
    if (q == 1.0) return norm1(x);
    if (q == 2.0) return norm2(x);
    if (std::isinf(q)) return norm_inf(x);
    double s = 0.0;
    for (double v : x) s += std::pow(std::fabs(v), q);
    return std::pow(s, 1.0 / q);
}

// Holder conjugate: 1/p + 1/q = 1, with the (1, infinity) pair handled.
inline double conjugate_order(double q) {
    if (!(q >= 1.0)) throw config_error("conjugate_order: order must be >= 1");
    if (q == 1.0) return std::numeric_limits<double>::infinity();
    if (std::isinf(q)) return 1.0;
    return q / (q - 1.0);
}

// Solve A x = b for dense row-major A (n x n) by Gaussian elimination with
// partial pivoting.  A and b are clobbered; the solution lands in b.
inline void solve_inplace(std::vector<double>& A, std::vector<double>& b, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::fabs(A[k * n + k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double a = std::fabs(A[i * n + k]);
            if (a > best) { best = a; piv = i; }
        }
        if (best < 1e-300) throw numeric_error("solve_inplace: singular matrix");
        if (piv != k) {
            for (std::size_t j = k; j < n; ++j) std::swap(A[k * n + j], A[piv * n + j]);
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = A[i * n + k] / A[k * n + k];
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) A[i * n + j] -= f * A[k * n + j];
            b[i] -= f * b[k];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= A[i * n + j] * b[j];
        b[i] = s / A[i * n + i];
    }
}

// Convenience wrapper that preserves the inputs.
inline vec solve_linear(std::vector<double> A, vec b, std::size_t n) {
    solve_inplace(A, b, n);
    return b;
}

// Same solve for a nested row-major matrix.
inline vec solve_linear(const std::vector<vec>& A, vec b) {
    const std::size_t n = A.size();
    std::vector<double> flat(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) flat[i * n + j] = A[i][j];
    solve_inplace(flat, b, n);
    return b;
}

// Cholesky factor L (row-major lower triangle) of a symmetric PSD matrix.
// A small ridge is added when the pivot stalls at zero so that limit-law
// covariances estimated from finite pools never abort the sampler.
inline std::vector<double> cholesky_psd(std::vector<double> A, std::size_t n) {
    double diag_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_max = std::max(diag_max, std::fabs(A[i * n + i]));
    const double ridge = 1e-12 * (diag_max > 0 ? diag_max : 1.0);
    std::vector<double> L(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = A[j * n + j] + ridge;
        for (std::size_t k = 0; k < j; ++k) d -= L[j * n + k] * L[j * n + k];
        if (d <= 0.0) throw numeric_error("cholesky_psd: matrix not positive semidefinite");
        L[j * n + j] = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = A[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
            L[i * n + j] = s / L[j * n + j];
        }
    }
    return L;
}

} // namespace ssldro
