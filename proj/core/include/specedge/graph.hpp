#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specedge/tensor.hpp"

namespace specedge {

/// Raised when an op produces NaN/Inf or an input is non-finite.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class OpKind {
    input,
    param,
    constant,
    matmul,
    add,
    sub,
    mul,
    scale,
    layer_norm,
    softmax,
    gelu,
    relu,
    embed,
    reshape,
    transpose,
    reduce_sum,
    reduce_mean,
    cross_entropy,
    mse
};

const char* op_name(OpKind k);

using NodeId = int;

/// Reverse-mode autodiff tape over dense Tensors.
///
/// Nodes are appended in topological order by construction; forward() walks
/// the tape once and caches every value, backward() walks it once in reverse.
/// Every op output is checked for finiteness; NaN/Inf surfaces as
/// NumericalError instead of propagating.
class Graph {
public:
    struct Node {
        OpKind op;
        NodeId a = -1;
        NodeId b = -1;
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        // per-op metadata
        double scalar = 0.0;            // scale factor / layer_norm eps
        bool trans_a = false, trans_b = false;
        Shape target_shape;             // reshape
        std::vector<int> perm;          // transpose
        std::vector<std::int32_t> ids;  // embed lookups / cross_entropy targets
        std::vector<double> payload;    // cross_entropy row weights / mse targets
        Tensor aux;                     // cached stats for backward
        std::string name;
    };

    // ---- graph construction -------------------------------------------------
    NodeId input(const std::string& name, Shape shape);
    NodeId param(const std::string& name, Tensor init);
    NodeId constant(Tensor value);

    /// Batched matrix product of the last two axes. Leading axes of `a` are
    /// batch axes; `b` either carries the same batch axes or none (a shared
    /// weight, broadcast over the batch).
    NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);
    NodeId add(NodeId a, NodeId b); // b broadcasts against a (right-aligned)
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b); // elementwise, b broadcasts against a
    NodeId scale(NodeId a, double factor);
    NodeId layer_norm(NodeId a, double eps = 1e-5); // normalizes last axis, no affine
    NodeId softmax(NodeId a);                       // last axis
    NodeId gelu(NodeId a);
    NodeId relu(NodeId a);
    /// Rows of `table` gathered by token id; output shape = ids_shape + [row_dim].
    NodeId embed(NodeId table, const std::vector<std::int32_t>& ids, Shape ids_shape);
    NodeId reshape(NodeId a, Shape shape);
    NodeId transpose(NodeId a, std::vector<int> perm);
    NodeId reduce_sum(NodeId a);
    NodeId reduce_mean(NodeId a);
    /// Mean weighted softmax cross-entropy over rows of a [R,C] tensor.
    NodeId cross_entropy(NodeId logits, std::vector<std::int32_t> targets,
                         std::vector<double> row_weights = {});
    /// Mean squared error of a length-R prediction against fixed targets.
    NodeId mse(NodeId pred, std::vector<double> targets);

    void mark_output(const std::string& name, NodeId id);

    // ---- execution -----------------------------------------------------------
    /// Runs the tape; returns the named outputs. All named inputs must be bound.
    std::map<std::string, Tensor> forward(const std::map<std::string, Tensor>& inputs);
    /// Gradients of a scalar loss node w.r.t. every param, keyed by param name.
    std::map<std::string, Tensor> backward(NodeId loss);

    const Tensor& value(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
    const Tensor& grad(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).grad; }
    Tensor& param_value(const std::string& name);
    std::size_t node_count() const { return nodes_.size(); }

private:
    NodeId push(Node n);
    void check_finite(NodeId id) const;
    void eval(Node& n);
    void eval_grad(Node& n);

    std::vector<Node> nodes_;
    std::map<std::string, NodeId> inputs_;
    std::map<std::string, NodeId> params_;
    std::vector<std::pair<std::string, NodeId>> outputs_;
    bool forward_done_ = false;
};

// Low-level kernel shared with non-autodiff numerics (trajectory analysis,
// probes). C (+)= op(A) * op(B) with row-major dense storage.
void matmul_kernel(const double* a, const double* b, double* c, int m, int k, int n,
                   bool trans_a, bool trans_b, bool accumulate);

} // namespace specedge
