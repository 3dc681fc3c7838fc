#include "specedge/spectral.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "specedge/linalg.hpp"

namespace specedge {

namespace {
constexpr double kValidRelTol = 1e-10; // sigma below this fraction of sigma_1 is padding
}

SpectralSnapshot snapshot(const TrajectoryWindow& window) {
    const int W = window.W;
    const std::int64_t p = window.p;
    if (W < 2) throw std::invalid_argument("snapshot: window must have W >= 2 rows");
    if (static_cast<std::int64_t>(window.rows.size()) != static_cast<std::int64_t>(W) * p)
        throw std::invalid_argument("snapshot: row storage does not match W*p");
    double total = 0.0;
    for (const double x : window.rows) total += x * x;
    if (total == 0.0) throw std::invalid_argument("snapshot: all-zero trajectory window");

    // W x W Gram matrix
    std::vector<double> gram(static_cast<std::size_t>(W) * W);
    for (int i = 0; i < W; ++i)
        for (int j = i; j < W; ++j) {
            const double g = dot({window.row(i), static_cast<std::size_t>(p)},
                                 {window.row(j), static_cast<std::size_t>(p)});
            gram[static_cast<std::size_t>(i) * W + j] = g;
            gram[static_cast<std::size_t>(j) * W + i] = g;
        }

    std::vector<double> lambda, u; // eigenvalues desc, eigenvectors as rows
    jacobi_eigh(gram, W, lambda, u);

    SpectralSnapshot snap;
    snap.end_step = window.end_step;
    snap.W = W;
    snap.p = p;
    snap.sigma.resize(static_cast<std::size_t>(W));
    snap.valid.resize(static_cast<std::size_t>(W));
    snap.v.assign(static_cast<std::size_t>(W), std::vector<double>(static_cast<std::size_t>(p), 0.0));
    for (int k = 0; k < W; ++k)
        snap.sigma[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, lambda[static_cast<std::size_t>(k)]));
    const double smax = snap.sigma[0];
    for (int k = 0; k < W; ++k) {
        const double s = snap.sigma[static_cast<std::size_t>(k)];
        const bool ok = s > kValidRelTol * smax && s > 0.0;
        snap.valid[static_cast<std::size_t>(k)] = ok;
        if (!ok) continue;
        // v_k = X^T u_k / sigma_k
        std::vector<double>& vk = snap.v[static_cast<std::size_t>(k)];
        for (int r = 0; r < W; ++r)
            axpy(u[static_cast<std::size_t>(k) * W + r] / s,
                 {window.row(r), static_cast<std::size_t>(p)}, vk);
        const double n = norm2(vk);
        if (n > 0.0)
            for (double& x : vk) x /= n;
    }

    snap.gaps.resize(static_cast<std::size_t>(W - 1));
    for (int k = 0; k + 1 < W; ++k) {
        const double a = snap.sigma[static_cast<std::size_t>(k)];
        const double b = snap.sigma[static_cast<std::size_t>(k + 1)];
        snap.gaps[static_cast<std::size_t>(k)] = a * a - b * b;
    }
    if (W >= 3) snap.g23 = snap.gaps[1];
    snap.k_star = k_star(snap);
    for (std::size_t k = 0; k < snap.gaps.size(); ++k) {
        if (static_cast<int>(k) + 1 != snap.k_star &&
            snap.gaps[k] == snap.gaps[static_cast<std::size_t>(snap.k_star - 1)]) {
            snap.k_star_tied = true; // degenerate spectrum; smallest k wins
            break;
        }
    }
    return snap;
}

int k_star(const SpectralSnapshot& snap) {
    int best = 1;
    double best_gap = snap.gaps.empty() ? 0.0 : snap.gaps[0];
    for (std::size_t k = 1; k < snap.gaps.size(); ++k) {
        if (snap.gaps[k] > best_gap) {
            best_gap = snap.gaps[k];
            best = static_cast<int>(k) + 1;
        }
    }
    return best;
}

double rotation(const SpectralSnapshot& prev, const SpectralSnapshot& curr, int k) {
    if (prev.p != curr.p) throw std::invalid_argument("rotation: snapshots live in different spaces");
    if (k < 1 || k > prev.W || k > curr.W) throw std::invalid_argument("rotation: k out of range");
    const auto& a = prev.v[static_cast<std::size_t>(k - 1)];
    const auto& b = curr.v[static_cast<std::size_t>(k - 1)];
    if (!prev.valid[static_cast<std::size_t>(k - 1)] || !curr.valid[static_cast<std::size_t>(k - 1)])
        throw std::invalid_argument("rotation: direction " + std::to_string(k) + " is degenerate");
    const double c = std::min(1.0, std::abs(dot(a, b)));
    return std::acos(c) * 57.29577951308232087680; // 180/pi
}

GapCompression gap_compression(double g23_a, double g23_b) {
    if (g23_a <= 0.0) throw std::invalid_argument("gap_compression: g23 at A must be positive");
    GapCompression out;
    if (g23_b == 0.0) {
        out.infinite = true;
        out.ratio = std::numeric_limits<double>::infinity();
    } else {
        out.ratio = g23_a / g23_b;
    }
    return out;
}

GapCompression gap_compression(const SpectralSnapshot& a, const SpectralSnapshot& b) {
    return gap_compression(a.g23, b.g23);
}

} // namespace specedge
