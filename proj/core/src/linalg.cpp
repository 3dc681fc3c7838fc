#include "specedge/linalg.hpp"

#include <algorithm>
#include <numeric>

namespace specedge {

std::size_t orthonormalize(std::vector<std::vector<double>>& vecs, double tol) {
    std::size_t kept = 0;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        std::vector<double>& v = vecs[i];
        const double n0 = norm2(v);
        if (n0 == 0.0) continue;
        for (std::size_t j = 0; j < kept; ++j) {
            const double c = dot(v, vecs[j]);
            axpy(-c, vecs[j], v);
        }
        const double n1 = norm2(v);
        if (n1 <= tol * n0) continue;
        for (double& x : v) x /= n1;
        if (kept != i) vecs[kept] = std::move(v);
        ++kept;
    }
    vecs.resize(kept);
    return kept;
}

void jacobi_eigh(const std::vector<double>& sym, int n, std::vector<double>& values,
                 std::vector<double>& vectors, int max_sweeps) {
    if (static_cast<int>(sym.size()) != n * n) throw std::invalid_argument("jacobi_eigh: bad size");
    std::vector<double> a = sym;
    std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;

    auto off = [&]() {
        double s = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) s += a[static_cast<std::size_t>(p) * n + q] * a[static_cast<std::size_t>(p) * n + q];
        return s;
    };
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[static_cast<std::size_t>(i) * n + i]));
    for (const double x : a) scale = std::max(scale, std::abs(x));
    const double stop = (scale == 0.0 ? 0.0 : scale * scale * 1e-30);

    for (int sweep = 0; sweep < max_sweeps && off() > stop; ++sweep) {
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[static_cast<std::size_t>(p) * n + q];
                if (apq == 0.0) continue;
                const double app = a[static_cast<std::size_t>(p) * n + p];
                const double aqq = a[static_cast<std::size_t>(q) * n + q];
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[static_cast<std::size_t>(k) * n + p];
                    const double akq = a[static_cast<std::size_t>(k) * n + q];
                    a[static_cast<std::size_t>(k) * n + p] = c * akp - s * akq;
                    a[static_cast<std::size_t>(k) * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[static_cast<std::size_t>(p) * n + k];
                    const double aqk = a[static_cast<std::size_t>(q) * n + k];
                    a[static_cast<std::size_t>(p) * n + k] = c * apk - s * aqk;
                    a[static_cast<std::size_t>(q) * n + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v[static_cast<std::size_t>(k) * n + p];
                    const double vkq = v[static_cast<std::size_t>(k) * n + q];
                    v[static_cast<std::size_t>(k) * n + p] = c * vkp - s * vkq;
                    v[static_cast<std::size_t>(k) * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return a[static_cast<std::size_t>(i) * n + i] > a[static_cast<std::size_t>(j) * n + j];
    });
    values.assign(static_cast<std::size_t>(n), 0.0);
    vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int r = 0; r < n; ++r) {
        values[static_cast<std::size_t>(r)] = a[static_cast<std::size_t>(order[r]) * n + order[r]];
        for (int k = 0; k < n; ++k)
            vectors[static_cast<std::size_t>(r) * n + k] = v[static_cast<std::size_t>(k) * n + order[r]];
    }
}

std::vector<double> cholesky_solve(std::vector<double> a, int n, const std::vector<double>& b,
                                   double ridge) {
    if (static_cast<int>(a.size()) != n * n || static_cast<int>(b.size()) != n)
        throw std::invalid_argument("cholesky_solve: bad sizes");
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + i] += ridge;

    // in-place lower Cholesky
    for (int j = 0; j < n; ++j) {
        double d = a[static_cast<std::size_t>(j) * n + j];
        for (int k = 0; k < j; ++k) {
            const double l = a[static_cast<std::size_t>(j) * n + k];
            d -= l * l;
        }
        if (d <= 0.0) throw std::runtime_error("cholesky_solve: matrix not positive definite");
        const double dj = std::sqrt(d);
        a[static_cast<std::size_t>(j) * n + j] = dj;
        for (int i = j + 1; i < n; ++i) {
            double s = a[static_cast<std::size_t>(i) * n + j];
            const double* ri = &a[static_cast<std::size_t>(i) * n];
            const double* rj = &a[static_cast<std::size_t>(j) * n];
            for (int k = 0; k < j; ++k) s -= ri[k] * rj[k];
            a[static_cast<std::size_t>(i) * n + j] = s / dj;
        }
    }

    std::vector<double> x = b;
    for (int i = 0; i < n; ++i) {
        double s = x[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= a[static_cast<std::size_t>(i) * n + k] * x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) s -= a[static_cast<std::size_t>(k) * n + i] * x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * n + i];
    }
    return x;
}

} // namespace specedge
