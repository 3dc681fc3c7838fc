#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "specedge/spectral.hpp"
#include "specedge/trainer.hpp"

namespace specedge {

enum class Alignment { aligned, opposed, degenerate };

const char* alignment_name(Alignment a);

/// Window-summed projections of the gradient and weight-decay update
/// components onto one Gram direction.
struct DirectionDecomposition {
    double a_grad = 0.0;
    double a_wd = 0.0;
    bool defined = false;       // false when both projections vanish or sigma_k ~ 0
    double grad_fraction = 0.0; // a_grad^2 / (a_grad^2 + a_wd^2)
    Alignment alignment = Alignment::degenerate;
};

struct UpdateDecomposition {
    long end_step = 0;
    std::vector<DirectionDecomposition> dirs; // index k-1 for direction v_k
};

/// Projects the window's per-step components onto the snapshot's directions.
/// `window` must hold exactly the W records ending at the snapshot's step.
/// When `per_step` is set, a_grad/a_wd are quadratic means of per-step
/// projections instead of window sums (sensitivity variant).
UpdateDecomposition decompose(const std::vector<const StepRecord*>& window,
                              const SpectralSnapshot& snap, bool per_step = false);

/// First window where grad_fraction(v_k) falls below 0.5 and stays below for
/// three consecutive windows. Returns that window's end step.
std::optional<long> flip_detector(const std::vector<UpdateDecomposition>& series, int k = 1,
                                  double threshold = 0.5, int sustain = 3);

/// One scalar log row per emitted window: the snapshot summary joined with
/// its decomposition (rotations relative to the previously emitted window).
struct WindowRow {
    long end_step = 0;
    std::vector<double> sigma;
    std::vector<double> gaps;
    double g23 = 0.0;
    int k_star = 1;
    bool k_star_tied = false;
    std::vector<double> rotation_deg; // -1 where undefined
    std::vector<double> stability;    // cos^2 vs previous window; -1 where undefined
    UpdateDecomposition decomp;
};

/// Online consumer of StepRecords: keeps the last W update deltas, emits a
/// snapshot + decomposition every `stride` steps, and retains the latest full
/// snapshot so phase events can capture edge vectors.
class WindowPipeline {
public:
    WindowPipeline(int W, int stride, std::int64_t p);

    void observe(const StepRecord& rec);

    const std::vector<WindowRow>& rows() const { return rows_; }
    const std::vector<UpdateDecomposition>& decomp_series() const { return decomps_; }
    /// Latest emitted snapshot with full vectors (nullptr before the first).
    const SpectralSnapshot* latest_snapshot() const {
        return latest_ ? &*latest_ : nullptr;
    }

private:
    int W_, stride_;
    std::int64_t p_;
    std::deque<StepRecord> ring_; // last W records (vectors only)
    std::vector<WindowRow> rows_;
    std::vector<UpdateDecomposition> decomps_;
    std::optional<SpectralSnapshot> latest_;
};

} // namespace specedge
