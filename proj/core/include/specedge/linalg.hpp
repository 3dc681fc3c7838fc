#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace specedge {

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double norm2(std::span<const double> a) {
    double s = 0.0;
    for (const double v : a) s += v * v;
    return std::sqrt(s);
}

/// In-place modified Gram-Schmidt; vectors with residual norm below `tol`
/// (relative to their input norm) are dropped. Returns the kept count; kept
/// vectors occupy the leading rows of `vecs`.
std::size_t orthonormalize(std::vector<std::vector<double>>& vecs, double tol = 1e-12);

/// Eigendecomposition of a small dense symmetric matrix (row-major n*n) by
/// cyclic Jacobi rotations. Returns eigenvalues in descending order and the
/// matching eigenvectors as rows of `vectors`.
void jacobi_eigh(const std::vector<double>& sym, int n, std::vector<double>& values,
                 std::vector<double>& vectors, int max_sweeps = 64);

/// Solves (A + lambda*I) x = b for symmetric positive definite A (row-major
/// n*n) by Cholesky factorization.
std::vector<double> cholesky_solve(std::vector<double> a, int n, const std::vector<double>& b,
                                   double ridge = 0.0);

} // namespace specedge
