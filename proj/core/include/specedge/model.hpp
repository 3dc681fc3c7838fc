#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "specedge/graph.hpp"
#include "specedge/tasks.hpp"

namespace specedge {

enum class Arch { decoder_only, encoder_decoder };

struct ModelConfig {
    Arch arch = Arch::decoder_only;
    int n_layers = 2; // per stack for encoder_decoder
    int d_model = 128;
    int n_heads = 4;
    int mlp_hidden = 32;
    int vocab_in = dyck::kVocab;
    int vocab_out = dyck::kMaxDepth + 1;
    int max_t = 24;     // decoder-only sequence length bound
    int max_t_src = 16; // encoder input bound (encoder_decoder only)
    // Multiplier on the 0.02 base init std. Grokking needs the large-norm
    // regime: weight decay then compresses the parameters into the
    // generalizing zone, producing the delayed test-accuracy jump. Small
    // init (scale 1) generalizes immediately at this model/data scale.
    double init_scale = 8.0;

    int head_dim() const { return d_model / n_heads; }
    void validate() const;

    static ModelConfig dyck_default();
    static ModelConfig scan_lite_default();
    static ModelConfig modadd_default(int p = 97);
};

/// Per-example token batch for decoder-only tasks. `weights` selects which
/// positions contribute to the loss and accuracy.
struct TokenBatch {
    int B = 0, T = 0;
    std::vector<std::int32_t> tokens;
    std::vector<std::int32_t> targets;
    std::vector<double> weights;
};

/// Padded command/action batch for the encoder-decoder task.
struct SeqBatch {
    int B = 0, Tc = 0, Ta = 0;
    std::vector<std::int32_t> cmd;     // B*Tc, pad-filled
    std::vector<std::int32_t> dec_in;  // B*Ta, <bos> + actions
    std::vector<std::int32_t> targets; // B*Ta, actions + <eos>
    std::vector<double> weights;       // B*Ta
};

TokenBatch make_dyck_batch(const std::vector<DyckExample>& xs);
TokenBatch make_modadd_batch(const std::vector<ModAddExample>& xs, int p);
SeqBatch make_scan_batch(const std::vector<ScanExample>& xs, int Tc, int Ta);

/// A built tape for one batch: loss node, logits, and capture hooks.
struct GraphBundle {
    Graph g;
    NodeId loss = -1;
    NodeId logits = -1;
    std::vector<NodeId> resid; // per decoder block, [B,T,d] post-residual
    std::vector<NodeId> attn;  // per decoder block, [B,H,T,T] row-stochastic
    int rows = 0;              // loss rows (B*T)
};

/// Captured activations from one forward pass.
struct CaptureBundle {
    Tensor logits;             // [B,T,C]
    std::vector<Tensor> resid; // per layer [B,T,d]
    std::vector<Tensor> attn;  // per layer [B,H,T,T]
};

struct EvalMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
    std::int64_t rows = 0;     // units behind `accuracy` (positions or sequences)
    double loss_weight = 0.0;  // total cross-entropy row weight behind `loss`
};

class Model {
public:
    static Model build(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    std::map<std::string, Tensor>& params() { return params_; }
    const std::map<std::string, Tensor>& params() const { return params_; }
    std::int64_t param_count() const;
    double param_norm() const;
    std::uint64_t checksum() const;

    // ---- attention parameter view (the edge subspace) ----------------------
    /// Q/K/V/O matrices in a fixed order: encoder blocks first (self-attn),
    /// then decoder blocks (self-attn then cross-attn), wq,wk,wv,wo within a
    /// block, each row-major.
    const std::vector<std::string>& attention_param_names() const { return attn_names_; }
    std::int64_t attention_dim() const { return attn_dim_; }
    std::vector<double> gather_attention() const;
    void scatter_attention(const std::vector<double>& view);

    // ---- graphs and evaluation ---------------------------------------------
    GraphBundle build_graph(const TokenBatch& batch, bool with_captures = false) const;
    GraphBundle build_graph(const SeqBatch& batch, bool with_captures = false) const;
    void sync_params(GraphBundle& bundle) const;

    EvalMetrics loss_and_metrics(const TokenBatch& batch) const;
    EvalMetrics loss_and_metrics(const SeqBatch& batch) const;
    CaptureBundle forward_capture(const TokenBatch& batch) const;
    CaptureBundle forward_capture(const SeqBatch& batch) const;

    /// Greedy autoregressive decode of one command (encoder-decoder only).
    std::vector<int> greedy_decode(const std::vector<int>& command, int max_len) const;

private:
    ModelConfig config_;
    std::map<std::string, Tensor> params_;
    std::vector<std::string> attn_names_;
    std::int64_t attn_dim_ = 0;
};

/// Position-weighted accuracy of logits [B,T,C] against targets.
double position_accuracy(const Tensor& logits, const std::vector<std::int32_t>& targets,
                         const std::vector<double>& weights);
/// Fraction of sequences whose weighted positions are all argmax-correct.
double exact_sequence_accuracy(const Tensor& logits, const std::vector<std::int32_t>& targets,
                               const std::vector<double>& weights);

} // namespace specedge
