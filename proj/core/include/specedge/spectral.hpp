#pragma once

#include <cstdint>
#include <vector>

#include "specedge/tensor.hpp"

namespace specedge {

/// W consecutive parameter-update deltas restricted to the attention view,
/// stacked as rows of a W x p matrix.
struct TrajectoryWindow {
    long end_step = 0;
    int W = 0;
    std::int64_t p = 0;
    std::vector<double> rows; // W*p row-major

    const double* row(int i) const { return rows.data() + static_cast<std::int64_t>(i) * p; }
};

/// Singular structure of one trajectory window, computed through the W x W
/// Gram matrix X X^T: eigenvalues give sigma_k^2, right singular vectors are
/// recovered as v_k = X^T u_k / sigma_k. Directions with sigma ~ 0 are kept
/// as zero vectors and flagged invalid.
struct SpectralSnapshot {
    long end_step = 0;
    int W = 0;
    std::int64_t p = 0;
    std::vector<double> sigma;          // descending
    std::vector<std::vector<double>> v; // unit right singular vectors (rows of length p)
    std::vector<bool> valid;
    std::vector<double> gaps; // g_{k,k+1} = sigma_k^2 - sigma_{k+1}^2
    double g23 = 0.0;
    int k_star = 1; // 1-indexed
    bool k_star_tied = false;
};

SpectralSnapshot snapshot(const TrajectoryWindow& window);

/// argmax_k sigma_k^2 - sigma_{k+1}^2 over k = 1..W-1; ties resolve to the
/// smallest k and are flagged on the snapshot.
int k_star(const SpectralSnapshot& snap);

/// Angle in degrees between the k-th directions of two snapshots, invariant
/// to the sign ambiguity of singular vectors. k is 1-indexed.
double rotation(const SpectralSnapshot& prev, const SpectralSnapshot& curr, int k);

struct GapCompression {
    double ratio = 0.0;
    bool infinite = false;
};

/// g23(A) / g23(B); a zero denominator is reported as infinite.
GapCompression gap_compression(const SpectralSnapshot& a, const SpectralSnapshot& b);
GapCompression gap_compression(double g23_a, double g23_b);

} // namespace specedge
