#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specedge/model.hpp"

namespace specedge {

struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OptConfig {
    double lr = 1e-3;
    double omega = 1.0; // decoupled weight decay
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-8;
    int warmup_steps = 50;
};

/// AdamW moments. Weight decay applies to rank>=2 tensors only (matrices and
/// embeddings), never to biases or layernorm parameters.
struct OptState {
    OptConfig cfg;
    long step = 0;
    std::map<std::string, Tensor> m1, m2;

    void reset(const Model& model);
};

/// Exact split of one update on the attention view:
/// delta_theta = delta_grad + delta_wd with delta_wd = -lr_t * omega * theta_pre.
struct StepRecord {
    long step = 0;
    std::vector<double> dgrad_attn;
    std::vector<double> dwd_attn;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double theta_norm = 0.0;
    bool has_eval = false;
    double test_loss = 0.0;
    double test_acc = 0.0;
};

/// One in-place AdamW step from precomputed grads; fills the attention-view
/// decomposition. `lr_t` includes warmup and is returned in the record scale.
StepRecord adamw_step(Model& model, const std::map<std::string, Tensor>& grads, OptState& opt);

struct MetricsRow {
    long step = 0;
    double train_loss = 0.0, train_acc = 0.0, theta_norm = 0.0;
    bool has_eval = false;
    double test_loss = 0.0, test_acc = 0.0;
};

struct GrokCriterion {
    double test_acc = 0.9;
    int sustain_evals = 3;
    double train_acc = 0.99;
    int train_lead_steps = 100;
};

/// First eval step whose test accuracy crosses the threshold and holds for
/// the next `sustain_evals` evals, with train accuracy having reached its own
/// threshold at least `train_lead_steps` earlier. nullopt when no such step.
std::optional<long> detect_grok(const std::vector<MetricsRow>& log,
                                const GrokCriterion& crit = {});

struct TrainConfig {
    OptConfig opt;
    long max_steps = 3000;
    int eval_interval = 20;
    int checkpoint_interval = 100;
    int eval_chunk = 256; // sequences per eval forward
    GrokCriterion grok;
};

struct PhaseCheckpoint {
    long step = -1;
    std::map<std::string, Tensor> params;
};

/// {init, pre_grok, grok, late} plus the periodic snapshots they are drawn
/// from. `grok` is present iff grokking was detected.
struct PhaseCheckpoints {
    PhaseCheckpoint init, pre_grok, late;
    std::optional<PhaseCheckpoint> grok;
    std::map<long, std::map<std::string, Tensor>> periodic;
};

struct TrainResult {
    std::vector<MetricsRow> log;
    PhaseCheckpoints phases;
    std::optional<long> grok_step;
    long steps_run = 0;
};

/// Full-batch (or fixed-batch cycling) AdamW training loop. `on_step` observes
/// every StepRecord; the trainer retains none of them.
class Trainer {
public:
    using StepHook = std::function<void(const StepRecord&)>;

    Trainer(Model& model, TrainConfig cfg) : model_(model), cfg_(std::move(cfg)) {}

    /// Decoder-only tasks: one fixed training batch, chunked eval batches.
    TrainResult train(const TokenBatch& train_batch, const std::vector<TokenBatch>& eval_chunks,
                      const StepHook& on_step = nullptr);
    /// Encoder-decoder task: deterministic cycling over fixed batches.
    TrainResult train(const std::vector<SeqBatch>& train_batches,
                      const std::vector<SeqBatch>& eval_chunks, const StepHook& on_step = nullptr);

private:
    template <typename Batch>
    TrainResult run(const std::vector<Batch>& train_batches, const std::vector<Batch>& eval_chunks,
                    const StepHook& on_step);

    Model& model_;
    TrainConfig cfg_;
};

/// Weighted aggregation of per-chunk metrics.
template <typename Batch>
EvalMetrics evaluate_chunks(const Model& model, const std::vector<Batch>& chunks) {
    EvalMetrics total;
    double acc_num = 0.0, loss_num = 0.0;
    for (const auto& c : chunks) {
        const EvalMetrics m = model.loss_and_metrics(c);
        loss_num += m.loss * m.loss_weight;
        acc_num += m.accuracy * static_cast<double>(m.rows);
        total.rows += m.rows;
        total.loss_weight += m.loss_weight;
    }
    total.loss = total.loss_weight > 0 ? loss_num / total.loss_weight : 0.0;
    total.accuracy = total.rows > 0 ? acc_num / static_cast<double>(total.rows) : 0.0;
    return total;
}

/// Split a dataset slice into fixed-size eval chunks.
std::vector<TokenBatch> chunk_dyck(const std::vector<DyckExample>& xs, int chunk);
std::vector<TokenBatch> chunk_modadd(const std::vector<ModAddExample>& xs, int p, int chunk);
std::vector<SeqBatch> chunk_scan(const std::vector<ScanExample>& xs, int Tc, int Ta, int chunk);

/// Resume training from checkpoint parameters with overridden optimizer
/// settings. Adam moments start from zero so the continuation conditions are
/// comparable. Returns the result of the continuation run.
TrainResult continue_from(Model& model, const std::map<std::string, Tensor>& checkpoint_params,
                          TrainConfig cfg, const TokenBatch& train_batch,
                          const std::vector<TokenBatch>& eval_chunks,
                          const Trainer::StepHook& on_step = nullptr);

} // namespace specedge
