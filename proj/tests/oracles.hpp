// Test-side oracles, independent of the library's computation paths:
//  - central finite differences for gradient checking
//  - a one-sided Jacobi SVD working directly on the dense matrix (never
//    forming the Gram matrix), for checking the Gram-route snapshots
//  - brute-force Dyck word enumeration
#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "specedge/tensor.hpp"

namespace oracles {

using ParamMap = std::map<std::string, specedge::Tensor>;
using LossFn = std::function<double(const ParamMap&)>;

/// Central finite differences d loss / d param at step eps.
inline ParamMap fd_gradients(const LossFn& loss, const ParamMap& params, double eps = 1e-5) {
    ParamMap grads;
    for (const auto& [name, t] : params) grads.emplace(name, specedge::Tensor(t.shape()));
    ParamMap work = params;
    for (auto& [name, t] : work) {
        for (std::int64_t i = 0; i < t.size(); ++i) {
            const double saved = t[i];
            t[i] = saved + eps;
            const double up = loss(work);
            t[i] = saved - eps;
            const double dn = loss(work);
            t[i] = saved;
            grads.at(name)[i] = (up - dn) / (2.0 * eps);
        }
    }
    return grads;
}

/// Largest relative mismatch between two gradient maps:
/// |a-b| / max(1e-8, |a|+|b|).
inline double max_rel_err(const ParamMap& a, const ParamMap& b) {
    double worst = 0.0;
    for (const auto& [name, ta] : a) {
        const specedge::Tensor& tb = b.at(name);
        for (std::int64_t i = 0; i < ta.size(); ++i) {
            const double den = std::max(1e-8, std::abs(ta[i]) + std::abs(tb[i]));
            worst = std::max(worst, std::abs(ta[i] - tb[i]) / den);
        }
    }
    return worst;
}

struct DenseSvd {
    std::vector<double> sigma;          // descending
    std::vector<std::vector<double>> v; // right singular vectors of X, unit rows
};

/// One-sided Jacobi SVD of a W x p matrix given by rows. Orthogonalizes the
/// columns of X^T; column norms are the singular values, normalized columns
/// are the right singular vectors of X.
inline DenseSvd dense_svd(const std::vector<std::vector<double>>& rows) {
    const int w = static_cast<int>(rows.size());
    const std::size_t p = rows[0].size();
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(w), std::vector<double>(p));
    for (int i = 0; i < w; ++i)
        for (std::size_t j = 0; j < p; ++j) cols[static_cast<std::size_t>(i)][j] = rows[static_cast<std::size_t>(i)][j];

    const double tol = 1e-14;
    for (int sweep = 0; sweep < 64; ++sweep) {
        bool rotated = false;
        for (int i = 0; i < w - 1; ++i) {
            for (int j = i + 1; j < w; ++j) {
                double aii = 0, ajj = 0, aij = 0;
                for (std::size_t k = 0; k < p; ++k) {
                    aii += cols[i][k] * cols[i][k];
                    ajj += cols[j][k] * cols[j][k];
                    aij += cols[i][k] * cols[j][k];
                }
                if (std::abs(aij) <= tol * std::sqrt(aii * ajj) || aij == 0.0) continue;
                rotated = true;
                const double tau = (ajj - aii) / (2.0 * aij);
                const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < p; ++k) {
                    const double vi = cols[i][k], vj = cols[j][k];
                    cols[i][k] = c * vi - s * vj;
                    cols[j][k] = s * vi + c * vj;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<std::pair<double, int>> order;
    for (int i = 0; i < w; ++i) {
        double n = 0;
        for (std::size_t k = 0; k < p; ++k) n += cols[i][k] * cols[i][k];
        order.emplace_back(std::sqrt(n), i);
    }
    std::sort(order.begin(), order.end(), [](auto& a, auto& b) { return a.first > b.first; });

    DenseSvd out;
    for (const auto& [s, i] : order) {
        out.sigma.push_back(s);
        std::vector<double> v = cols[static_cast<std::size_t>(i)];
        if (s > 0)
            for (double& x : v) x /= s;
        out.v.push_back(std::move(v));
    }
    return out;
}

/// All Dyck words of length T, as 0/1 (open/close) vectors.
inline void enumerate_dyck(int T, std::vector<int>& prefix, int depth,
                           std::vector<std::vector<int>>& out) {
    if (static_cast<int>(prefix.size()) == T) {
        if (depth == 0) out.push_back(prefix);
        return;
    }
    const int remaining = T - static_cast<int>(prefix.size());
    if (depth + 1 <= remaining - 1) {
        prefix.push_back(0);
        enumerate_dyck(T, prefix, depth + 1, out);
        prefix.pop_back();
    }
    if (depth > 0) {
        prefix.push_back(1);
        enumerate_dyck(T, prefix, depth - 1, out);
        prefix.pop_back();
    }
}

inline std::vector<std::vector<int>> all_dyck_words(int T) {
    std::vector<std::vector<int>> out;
    std::vector<int> prefix;
    enumerate_dyck(T, prefix, 0, out);
    return out;
}

} // namespace oracles
