#include "specedge/decomp.hpp"

#include <cmath>
#include <stdexcept>

#include "specedge/linalg.hpp"

namespace specedge {

const char* alignment_name(Alignment a) {
    switch (a) {
        case Alignment::aligned: return "aligned";
        case Alignment::opposed: return "opposed";
        case Alignment::degenerate: return "degenerate";
    }
    return "?";
}

UpdateDecomposition decompose(const std::vector<const StepRecord*>& window,
                              const SpectralSnapshot& snap, bool per_step) {
    if (static_cast<int>(window.size()) != snap.W)
        throw std::invalid_argument("decompose: record count does not match snapshot window");
    if (window.empty() || window.back()->step != snap.end_step)
        throw std::invalid_argument("decompose: window end step does not match snapshot");
    for (const StepRecord* r : window)
        if (static_cast<std::int64_t>(r->dgrad_attn.size()) != snap.p)
            throw std::invalid_argument("decompose: record dimensionality mismatch");

    UpdateDecomposition out;
    out.end_step = snap.end_step;
    out.dirs.resize(static_cast<std::size_t>(snap.W));
    for (int k = 0; k < snap.W; ++k) {
        DirectionDecomposition& d = out.dirs[static_cast<std::size_t>(k)];
        if (!snap.valid[static_cast<std::size_t>(k)]) continue; // degenerate direction, excluded
        const auto& vk = snap.v[static_cast<std::size_t>(k)];
        double ag = 0.0, aw = 0.0, ag2 = 0.0, aw2 = 0.0;
        for (const StepRecord* r : window) {
            const double pg = dot(vk, r->dgrad_attn);
            const double pw = dot(vk, r->dwd_attn);
            ag += pg;
            aw += pw;
            ag2 += pg * pg;
            aw2 += pw * pw;
        }
        if (per_step) {
            // quadratic-mean variant keeps the same units as the window sums
            d.a_grad = std::sqrt(ag2) * (ag < 0 ? -1.0 : 1.0);
            d.a_wd = std::sqrt(aw2) * (aw < 0 ? -1.0 : 1.0);
        } else {
            d.a_grad = ag;
            d.a_wd = aw;
        }
        const double den = d.a_grad * d.a_grad + d.a_wd * d.a_wd;
        if (den == 0.0) continue; // both projections zero
        d.defined = true;
        d.grad_fraction = d.a_grad * d.a_grad / den;
        const double s = d.a_grad * d.a_wd;
        d.alignment = s > 0.0 ? Alignment::aligned : (s < 0.0 ? Alignment::opposed : Alignment::degenerate);
    }
    return out;
}

std::optional<long> flip_detector(const std::vector<UpdateDecomposition>& series, int k,
                                  double threshold, int sustain) {
    if (k < 1) throw std::invalid_argument("flip_detector: k must be >= 1");
    auto below = [&](const UpdateDecomposition& d) {
        const std::size_t idx = static_cast<std::size_t>(k - 1);
        if (idx >= d.dirs.size() || !d.dirs[idx].defined) return false;
        return d.dirs[idx].grad_fraction < threshold;
    };
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!below(series[i])) continue;
        bool ok = true;
        for (int j = 1; j < sustain && ok; ++j) {
            const std::size_t idx = i + static_cast<std::size_t>(j);
            ok = idx < series.size() && below(series[idx]);
        }
        if (ok) return series[i].end_step;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// online pipeline
// ---------------------------------------------------------------------------

WindowPipeline::WindowPipeline(int W, int stride, std::int64_t p) : W_(W), stride_(stride), p_(p) {
    if (W < 2 || stride < 1 || p < 1) throw std::invalid_argument("WindowPipeline: bad configuration");
}

void WindowPipeline::observe(const StepRecord& rec) {
    if (static_cast<std::int64_t>(rec.dgrad_attn.size()) != p_)
        throw std::invalid_argument("WindowPipeline: record dimensionality mismatch");
    StepRecord slim;
    slim.step = rec.step;
    slim.dgrad_attn = rec.dgrad_attn;
    slim.dwd_attn = rec.dwd_attn;
    ring_.push_back(std::move(slim));
    if (static_cast<int>(ring_.size()) > W_) ring_.pop_front();
    if (static_cast<int>(ring_.size()) < W_ || rec.step % stride_ != 0) return;

    TrajectoryWindow win;
    win.end_step = rec.step;
    win.W = W_;
    win.p = p_;
    win.rows.resize(static_cast<std::size_t>(W_) * static_cast<std::size_t>(p_));
    std::vector<const StepRecord*> records;
    for (int i = 0; i < W_; ++i) {
        const StepRecord& r = ring_[static_cast<std::size_t>(i)];
        records.push_back(&r);
        double* dst = win.rows.data() + static_cast<std::int64_t>(i) * p_;
        for (std::int64_t j = 0; j < p_; ++j) dst[j] = r.dgrad_attn[static_cast<std::size_t>(j)] +
                                                       r.dwd_attn[static_cast<std::size_t>(j)];
    }

    double total = 0.0;
    for (const double x : win.rows) total += x * x;
    if (total == 0.0) return; // nothing moved (eta = 0); no window to report

    SpectralSnapshot snap = snapshot(win);
    WindowRow row;
    row.end_step = snap.end_step;
    row.sigma = snap.sigma;
    row.gaps = snap.gaps;
    row.g23 = snap.g23;
    row.k_star = snap.k_star;
    row.k_star_tied = snap.k_star_tied;
    row.rotation_deg.assign(static_cast<std::size_t>(W_), -1.0);
    row.stability.assign(static_cast<std::size_t>(W_), -1.0);
    if (latest_) {
        for (int k = 1; k <= W_; ++k) {
            if (!latest_->valid[static_cast<std::size_t>(k - 1)] ||
                !snap.valid[static_cast<std::size_t>(k - 1)])
                continue;
            const double deg = rotation(*latest_, snap, k);
            row.rotation_deg[static_cast<std::size_t>(k - 1)] = deg;
            const double c = std::cos(deg / 57.29577951308232087680);
            row.stability[static_cast<std::size_t>(k - 1)] = c * c;
        }
    }
    row.decomp = decompose(records, snap);
    decomps_.push_back(row.decomp);
    rows_.push_back(std::move(row));
    latest_ = std::move(snap);
}

} // namespace specedge
