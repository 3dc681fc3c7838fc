#include "specedge/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace specedge {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::input: return "input";
        case OpKind::param: return "param";
        case OpKind::constant: return "constant";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::mul: return "mul";
        case OpKind::scale: return "scale";
        case OpKind::layer_norm: return "layer_norm";
        case OpKind::softmax: return "softmax";
        case OpKind::gelu: return "gelu";
        case OpKind::relu: return "relu";
        case OpKind::embed: return "embed";
        case OpKind::reshape: return "reshape";
        case OpKind::transpose: return "transpose";
        case OpKind::reduce_sum: return "reduce_sum";
        case OpKind::reduce_mean: return "reduce_mean";
        case OpKind::cross_entropy: return "cross_entropy";
        case OpKind::mse: return "mse";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// kernels
// ---------------------------------------------------------------------------

namespace {

// C[i,j] += A[i,l] * B[l,j]; the l-unroll keeps several FMA streams per
// load/store of the C row.
void kernel_nn(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        int l = 0;
        for (; l + 4 <= k; l += 4) {
            const double a0 = arow[l], a1 = arow[l + 1], a2 = arow[l + 2], a3 = arow[l + 3];
            const double* b0 = b + static_cast<std::size_t>(l) * n;
            const double* b1 = b0 + n;
            const double* b2 = b1 + n;
            const double* b3 = b2 + n;
            for (int j = 0; j < n; ++j) crow[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
        }
        for (; l < k; ++l) {
            const double av = arow[l];
            const double* brow = b + static_cast<std::size_t>(l) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// A stored [k,m]; C[i,j] += A[l,i] * B[l,j]
void kernel_tn(const double* a, const double* b, double* c, int m, int k, int n) {
    int l = 0;
    for (; l + 4 <= k; l += 4) {
        const double* a0 = a + static_cast<std::size_t>(l) * m;
        const double* a1 = a0 + m;
        const double* a2 = a1 + m;
        const double* a3 = a2 + m;
        const double* b0 = b + static_cast<std::size_t>(l) * n;
        const double* b1 = b0 + n;
        const double* b2 = b1 + n;
        const double* b3 = b2 + n;
        for (int i = 0; i < m; ++i) {
            const double v0 = a0[i], v1 = a1[i], v2 = a2[i], v3 = a3[i];
            double* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += v0 * b0[j] + v1 * b1[j] + v2 * b2[j] + v3 * b3[j];
        }
    }
    for (; l < k; ++l) {
        const double* arow = a + static_cast<std::size_t>(l) * m;
        const double* brow = b + static_cast<std::size_t>(l) * n;
        for (int i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace

void matmul_kernel(const double* a, const double* b, double* c, int m, int k, int n,
                   bool trans_a, bool trans_b, bool accumulate) {
    if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
    if (!trans_a && !trans_b) {
        kernel_nn(a, b, c, m, k, n);
    } else if (!trans_a && trans_b) {
        // B stored [n,k]; transpose into scratch once so the inner product
        // becomes the streaming NN form (dot-product reductions do not
        // vectorize without reassociation)
        thread_local std::vector<double> scratch;
        scratch.resize(static_cast<std::size_t>(k) * n);
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < k; ++l)
                scratch[static_cast<std::size_t>(l) * n + j] = b[static_cast<std::size_t>(j) * k + l];
        kernel_nn(a, scratch.data(), c, m, k, n);
    } else if (trans_a && !trans_b) {
        kernel_tn(a, b, c, m, k, n);
    } else {
        throw std::logic_error("matmul_kernel: doubly-transposed product not supported");
    }
}

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Split a matmul operand's shape into batch extent and matrix dims.
struct MatView {
    std::int64_t batch;
    int rows, cols;
    Shape batch_shape;
};

MatView mat_view(const Shape& s, const char* what) {
    require(s.size() >= 2, std::string(what) + ": operand must have rank >= 2");
    MatView v;
    v.rows = s[s.size() - 2];
    v.cols = s[s.size() - 1];
    v.batch = 1;
    for (std::size_t i = 0; i + 2 < s.size(); ++i) {
        v.batch *= s[i];
        v.batch_shape.push_back(s[i]);
    }
    return v;
}

} // namespace

// ---------------------------------------------------------------------------
// construction
// ---------------------------------------------------------------------------

NodeId Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    forward_done_ = false;
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::input(const std::string& name, Shape shape) {
    require(!inputs_.count(name), "duplicate input name: " + name);
    Node n;
    n.op = OpKind::input;
    n.name = name;
    n.value = Tensor(std::move(shape));
    NodeId id = push(std::move(n));
    inputs_[name] = id;
    return id;
}

NodeId Graph::param(const std::string& name, Tensor init) {
    require(!params_.count(name), "duplicate param name: " + name);
    Node n;
    n.op = OpKind::param;
    n.name = name;
    n.value = std::move(init);
    n.requires_grad = true;
    NodeId id = push(std::move(n));
    params_[name] = id;
    return id;
}

NodeId Graph::constant(Tensor value) {
    Node n;
    n.op = OpKind::constant;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
    require(!(trans_a && trans_b), "matmul: at most one operand may be transposed");
    const auto& sa = nodes_[a].value.shape();
    const auto& sb = nodes_[b].value.shape();
    MatView va = mat_view(sa, "matmul lhs"), vb = mat_view(sb, "matmul rhs");
    const int am = trans_a ? va.cols : va.rows, ak = trans_a ? va.rows : va.cols;
    const int bk = trans_b ? vb.cols : vb.rows, bn = trans_b ? vb.rows : vb.cols;
    require(ak == bk, "matmul: inner extents differ, " + shape_str(sa) + " x " + shape_str(sb));
    require(vb.batch == 1 || vb.batch_shape == va.batch_shape,
            "matmul: rhs batch axes must be empty or equal lhs batch axes");
    Node n;
    n.op = OpKind::matmul;
    n.a = a;
    n.b = b;
    n.trans_a = trans_a;
    n.trans_b = trans_b;
    Shape out = va.batch_shape;
    out.push_back(am);
    out.push_back(bn);
    n.value = Tensor(std::move(out));
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

namespace {

// Elementwise second operand must match the first, or be a right-aligned
// suffix of it (bias vectors, shared masks). Returns repeat count.
std::int64_t broadcast_repeats(const Shape& a, const Shape& b) {
    require(b.size() <= a.size(), "broadcast: rhs rank exceeds lhs rank");
    const std::size_t off = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i)
        require(b[i] == a[off + i], "broadcast: rhs " + shape_str(b) + " is not a suffix of " + shape_str(a));
    std::int64_t rep = 1;
    for (std::size_t i = 0; i < off; ++i) rep *= a[i];
    return rep;
}

} // namespace

NodeId Graph::add(NodeId a, NodeId b) {
    broadcast_repeats(nodes_[a].value.shape(), nodes_[b].value.shape());
    Node n;
    n.op = OpKind::add;
    n.a = a;
    n.b = b;
    n.value = Tensor(nodes_[a].value.shape());
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
    broadcast_repeats(nodes_[a].value.shape(), nodes_[b].value.shape());
    Node n;
    n.op = OpKind::sub;
    n.a = a;
    n.b = b;
    n.value = Tensor(nodes_[a].value.shape());
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
    broadcast_repeats(nodes_[a].value.shape(), nodes_[b].value.shape());
    Node n;
    n.op = OpKind::mul;
    n.a = a;
    n.b = b;
    n.value = Tensor(nodes_[a].value.shape());
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double factor) {
    Node n;
    n.op = OpKind::scale;
    n.a = a;
    n.scalar = factor;
    n.value = Tensor(nodes_[a].value.shape());
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Graph::layer_norm(NodeId a, double eps) {
    require(nodes_[a].value.rank() >= 1, "layer_norm: operand must have rank >= 1");
    Node n;
    n.op = OpKind::layer_norm;
    n.a = a;
    n.scalar = eps;
    n.value = Tensor(nodes_[a].value.shape());
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Graph::softmax(NodeId a) {
    require(nodes_[a].value.rank() >= 1, "softmax: operand must have rank >= 1");
    Node n;
    n.op = OpKind::softmax;
    n.a = a;
    n.value = Tensor(nodes_[a].value.shape());
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Graph::gelu(NodeId a) {
    Node n;
    n.op = OpKind::gelu;
    n.a = a;
    n.value = Tensor(nodes_[a].value.shape());
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Graph::relu(NodeId a) {
    Node n;
    n.op = OpKind::relu;
    n.a = a;
    n.value = Tensor(nodes_[a].value.shape());
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Graph::embed(NodeId table, const std::vector<std::int32_t>& ids, Shape ids_shape) {
    const auto& ts = nodes_[table].value.shape();
    require(ts.size() == 2, "embed: table must be [vocab, dim]");
    require(static_cast<std::int64_t>(ids.size()) == shape_numel(ids_shape),
            "embed: id count does not match ids_shape");
    for (auto id : ids)
        require(id >= 0 && id < ts[0], "embed: token id " + std::to_string(id) + " outside vocab of " +
                                           std::to_string(ts[0]));
    Node n;
    n.op = OpKind::embed;
    n.a = table;
    n.ids = ids;
    Shape out = ids_shape;
    out.push_back(ts[1]);
    n.value = Tensor(std::move(out));
    n.requires_grad = nodes_[table].requires_grad;
    return push(std::move(n));
}

NodeId Graph::reshape(NodeId a, Shape shape) {
    require(shape_numel(shape) == nodes_[a].value.size(), "reshape: element count mismatch");
    Node n;
    n.op = OpKind::reshape;
    n.a = a;
    n.value = Tensor(std::move(shape));
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Graph::transpose(NodeId a, std::vector<int> perm) {
    const auto& s = nodes_[a].value.shape();
    require(perm.size() == s.size(), "transpose: perm rank mismatch");
    std::vector<bool> seen(perm.size(), false);
    Shape out(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        require(perm[i] >= 0 && perm[i] < static_cast<int>(s.size()) && !seen[perm[i]],
                "transpose: perm is not a permutation");
        seen[perm[i]] = true;
        out[i] = s[perm[i]];
    }
    Node n;
    n.op = OpKind::transpose;
    n.a = a;
    n.perm = std::move(perm);
    n.value = Tensor(std::move(out));
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Graph::reduce_sum(NodeId a) {
    Node n;
    n.op = OpKind::reduce_sum;
    n.a = a;
    n.value = Tensor::scalar(0.0);
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Graph::reduce_mean(NodeId a) {
    Node n;
    n.op = OpKind::reduce_mean;
    n.a = a;
    n.value = Tensor::scalar(0.0);
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Graph::cross_entropy(NodeId logits, std::vector<std::int32_t> targets,
                            std::vector<double> row_weights) {
    const auto& s = nodes_[logits].value.shape();
    require(s.size() == 2, "cross_entropy: logits must be [rows, classes]");
    require(static_cast<std::int64_t>(targets.size()) == s[0], "cross_entropy: target count != rows");
    require(row_weights.empty() || row_weights.size() == targets.size(),
            "cross_entropy: row weight count != rows");
    for (auto t : targets)
        require(t >= 0 && t < s[1], "cross_entropy: target class out of range");
    Node n;
    n.op = OpKind::cross_entropy;
    n.a = logits;
    n.ids = std::move(targets);
    n.payload = std::move(row_weights);
    n.value = Tensor::scalar(0.0);
    n.requires_grad = nodes_[logits].requires_grad;
    return push(std::move(n));
}

NodeId Graph::mse(NodeId pred, std::vector<double> targets) {
    require(nodes_[pred].value.size() == static_cast<std::int64_t>(targets.size()),
            "mse: prediction/target count mismatch");
    Node n;
    n.op = OpKind::mse;
    n.a = pred;
    n.payload = std::move(targets);
    n.value = Tensor::scalar(0.0);
    n.requires_grad = nodes_[pred].requires_grad;
    return push(std::move(n));
}

void Graph::mark_output(const std::string& name, NodeId id) {
    outputs_.emplace_back(name, id);
}

Tensor& Graph::param_value(const std::string& name) {
    auto it = params_.find(name);
    require(it != params_.end(), "unknown param: " + name);
    return nodes_[static_cast<std::size_t>(it->second)].value;
}

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

void Graph::check_finite(NodeId id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    for (const double v : n.value.vec()) {
        if (!std::isfinite(v))
            throw NumericalError(std::string("non-finite value produced by ") + op_name(n.op) +
                                 " node " + std::to_string(id));
    }
}

void Graph::eval(Node& n) {
    switch (n.op) {
        case OpKind::input:
        case OpKind::param:
        case OpKind::constant:
            return;
        case OpKind::matmul: {
            const Tensor& A = nodes_[n.a].value;
            const Tensor& B = nodes_[n.b].value;
            MatView va = mat_view(A.shape(), "matmul"), vb = mat_view(B.shape(), "matmul");
            const int m = n.trans_a ? va.cols : va.rows;
            const int k = n.trans_a ? va.rows : va.cols;
            const int nn = n.trans_b ? vb.rows : vb.cols;
            const std::int64_t a_stride = static_cast<std::int64_t>(va.rows) * va.cols;
            const std::int64_t b_stride = vb.batch == 1 ? 0 : static_cast<std::int64_t>(vb.rows) * vb.cols;
            const std::int64_t c_stride = static_cast<std::int64_t>(m) * nn;
            for (std::int64_t bi = 0; bi < va.batch; ++bi) {
                matmul_kernel(A.data() + bi * a_stride, B.data() + bi * b_stride,
                              n.value.data() + bi * c_stride, m, k, nn, n.trans_a, n.trans_b, false);
            }
            break;
        }
        case OpKind::add:
        case OpKind::sub:
        case OpKind::mul: {
            const Tensor& A = nodes_[n.a].value;
            const Tensor& B = nodes_[n.b].value;
            const std::int64_t bs = B.size();
            const std::int64_t reps = A.size() / bs;
            const double* b0 = B.data();
            for (std::int64_t r = 0; r < reps; ++r) {
                const double* a = A.data() + r * bs;
                double* o = n.value.data() + r * bs;
                if (n.op == OpKind::add)
                    for (std::int64_t i = 0; i < bs; ++i) o[i] = a[i] + b0[i];
                else if (n.op == OpKind::sub)
                    for (std::int64_t i = 0; i < bs; ++i) o[i] = a[i] - b0[i];
                else
                    for (std::int64_t i = 0; i < bs; ++i) o[i] = a[i] * b0[i];
            }
            break;
        }
        case OpKind::scale: {
            const Tensor& A = nodes_[n.a].value;
            for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = A[i] * n.scalar;
            break;
        }
        case OpKind::layer_norm: {
            const Tensor& A = nodes_[n.a].value;
            const int d = A.shape().back();
            const std::int64_t rows = A.size() / d;
            if (n.aux.size() != rows) n.aux = Tensor({static_cast<int>(rows)});
            for (std::int64_t r = 0; r < rows; ++r) {
                const double* x = A.data() + r * d;
                double* y = n.value.data() + r * d;
                double mean = 0.0;
                for (int i = 0; i < d; ++i) mean += x[i];
                mean /= d;
                double var = 0.0;
                for (int i = 0; i < d; ++i) var += (x[i] - mean) * (x[i] - mean);
                var /= d;
                const double rstd = 1.0 / std::sqrt(var + n.scalar);
                n.aux[r] = rstd;
                for (int i = 0; i < d; ++i) y[i] = (x[i] - mean) * rstd;
            }
            break;
        }
        case OpKind::softmax: {
            const Tensor& A = nodes_[n.a].value;
            const int d = A.shape().back();
            const std::int64_t rows = A.size() / d;
            for (std::int64_t r = 0; r < rows; ++r) {
                const double* x = A.data() + r * d;
                double* y = n.value.data() + r * d;
                double m = x[0];
                for (int i = 1; i < d; ++i) m = std::max(m, x[i]);
                double z = 0.0;
                for (int i = 0; i < d; ++i) {
                    y[i] = std::exp(x[i] - m);
                    z += y[i];
                }
                const double inv = 1.0 / z;
                for (int i = 0; i < d; ++i) y[i] *= inv;
            }
            break;
        }
        case OpKind::gelu: {
            const Tensor& A = nodes_[n.a].value;
            constexpr double inv_sqrt2 = 0.70710678118654752440;
            for (std::int64_t i = 0; i < A.size(); ++i)
                n.value[i] = 0.5 * A[i] * (1.0 + std::erf(A[i] * inv_sqrt2));
            break;
        }
        case OpKind::relu: {
            const Tensor& A = nodes_[n.a].value;
            for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = A[i] > 0.0 ? A[i] : 0.0;
            break;
        }
        case OpKind::embed: {
            const Tensor& T = nodes_[n.a].value;
            const int d = T.shape()[1];
            for (std::size_t i = 0; i < n.ids.size(); ++i)
                std::memcpy(n.value.data() + static_cast<std::int64_t>(i) * d,
                            T.data() + static_cast<std::int64_t>(n.ids[i]) * d,
                            sizeof(double) * static_cast<std::size_t>(d));
            break;
        }
        case OpKind::reshape: {
            const Tensor& A = nodes_[n.a].value;
            std::memcpy(n.value.data(), A.data(), sizeof(double) * static_cast<std::size_t>(A.size()));
            break;
        }
        case OpKind::transpose: {
            const Tensor& A = nodes_[n.a].value;
            const auto& in = A.shape();
            const int r = static_cast<int>(in.size());
            std::vector<std::int64_t> in_stride(r, 1), out_stride(r, 1);
            for (int i = r - 2; i >= 0; --i) in_stride[i] = in_stride[i + 1] * in[i + 1];
            const auto& os = n.value.shape();
            for (int i = r - 2; i >= 0; --i) out_stride[i] = out_stride[i + 1] * os[i + 1];
            std::vector<std::int64_t> src_stride(r);
            for (int i = 0; i < r; ++i) src_stride[i] = in_stride[n.perm[i]];
            std::vector<std::int64_t> idx(r, 0);
            const double* a = A.data();
            double* o = n.value.data();
            std::int64_t src = 0;
            for (std::int64_t oi = 0; oi < A.size(); ++oi) {
                o[oi] = a[src];
                for (int axis = r - 1; axis >= 0; --axis) {
                    if (++idx[axis] < os[axis]) {
                        src += src_stride[axis];
                        break;
                    }
                    src -= src_stride[axis] * (os[axis] - 1);
                    idx[axis] = 0;
                }
            }
            break;
        }
        case OpKind::reduce_sum:
        case OpKind::reduce_mean: {
            const Tensor& A = nodes_[n.a].value;
            double s = 0.0;
            for (std::int64_t i = 0; i < A.size(); ++i) s += A[i];
            n.value[0] = n.op == OpKind::reduce_sum ? s : s / static_cast<double>(A.size());
            break;
        }
        case OpKind::cross_entropy: {
            const Tensor& L = nodes_[n.a].value;
            const int c = L.shape()[1];
            const std::int64_t rows = L.shape()[0];
            if (!n.aux.same_shape(L)) n.aux = Tensor(L.shape());
            double loss = 0.0, wsum = 0.0;
            for (std::int64_t r = 0; r < rows; ++r) {
                const double w = n.payload.empty() ? 1.0 : n.payload[static_cast<std::size_t>(r)];
                const double* x = L.data() + r * c;
                double* p = n.aux.data() + r * c;
                double m = x[0];
                for (int i = 1; i < c; ++i) m = std::max(m, x[i]);
                double z = 0.0;
                for (int i = 0; i < c; ++i) {
                    p[i] = std::exp(x[i] - m);
                    z += p[i];
                }
                const double inv = 1.0 / z;
                for (int i = 0; i < c; ++i) p[i] *= inv;
                loss += w * (std::log(z) + m - x[n.ids[static_cast<std::size_t>(r)]]);
                wsum += w;
            }
            require(wsum > 0.0, "cross_entropy: all row weights are zero");
            n.scalar = wsum; // kept for backward
            n.value[0] = loss / wsum;
            break;
        }
        case OpKind::mse: {
            const Tensor& P = nodes_[n.a].value;
            double s = 0.0;
            for (std::int64_t i = 0; i < P.size(); ++i) {
                const double d = P[i] - n.payload[static_cast<std::size_t>(i)];
                s += d * d;
            }
            n.value[0] = s / static_cast<double>(P.size());
            break;
        }
    }
}

std::map<std::string, Tensor> Graph::forward(const std::map<std::string, Tensor>& inputs) {
    for (const auto& [name, id] : inputs_) {
        auto it = inputs.find(name);
        if (it == inputs.end()) throw std::invalid_argument("unbound input: " + name);
        Node& node = nodes_[static_cast<std::size_t>(id)];
        if (!(it->second.shape() == node.value.shape()))
            throw std::invalid_argument("input " + name + " has shape " + shape_str(it->second.shape()) +
                                        ", expected " + shape_str(node.value.shape()));
        node.value = it->second;
    }
    for (const auto& [name, t] : inputs)
        if (!inputs_.count(name)) throw std::invalid_argument("unknown input: " + name);

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        eval(nodes_[i]);
        check_finite(static_cast<NodeId>(i));
    }
    forward_done_ = true;

    std::map<std::string, Tensor> out;
    for (const auto& [name, id] : outputs_) out[name] = nodes_[static_cast<std::size_t>(id)].value;
    return out;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

void Graph::eval_grad(Node& n) {
    const Tensor& g = n.grad;
    auto arg_grad = [&](NodeId id) -> Tensor* {
        if (id < 0) return nullptr;
        Node& a = nodes_[static_cast<std::size_t>(id)];
        if (!a.requires_grad) return nullptr;
        return &a.grad;
    };

    switch (n.op) {
        case OpKind::input:
        case OpKind::param:
        case OpKind::constant:
            return;
        case OpKind::matmul: {
            const Tensor& A = nodes_[n.a].value;
            const Tensor& B = nodes_[n.b].value;
            MatView va = mat_view(A.shape(), "matmul"), vb = mat_view(B.shape(), "matmul");
            const int m = n.trans_a ? va.cols : va.rows;
            const int k = n.trans_a ? va.rows : va.cols;
            const int nn = n.trans_b ? vb.rows : vb.cols;
            const std::int64_t a_stride = static_cast<std::int64_t>(va.rows) * va.cols;
            const std::int64_t b_stride = vb.batch == 1 ? 0 : static_cast<std::int64_t>(vb.rows) * vb.cols;
            const std::int64_t c_stride = static_cast<std::int64_t>(m) * nn;
            Tensor* ga = arg_grad(n.a);
            Tensor* gb = arg_grad(n.b);
            for (std::int64_t bi = 0; bi < va.batch; ++bi) {
                const double* gc = g.data() + bi * c_stride;
                const double* a = A.data() + bi * a_stride;
                const double* b = B.data() + bi * b_stride;
                if (ga) {
                    double* da = ga->data() + bi * a_stride;
                    if (!n.trans_a && !n.trans_b)
                        matmul_kernel(gc, b, da, m, nn, k, false, true, true); // dA = dC B^T
                    else if (!n.trans_a && n.trans_b)
                        matmul_kernel(gc, b, da, m, nn, k, false, false, true); // dA = dC B
                    else
                        matmul_kernel(b, gc, da, k, nn, m, false, true, true); // dA(stored) = B dC^T
                }
                if (gb) {
                    double* db = gb->data() + bi * b_stride;
                    if (!n.trans_b) {
                        if (!n.trans_a)
                            matmul_kernel(a, gc, db, k, m, nn, true, false, true); // dB = A^T dC
                        else
                            matmul_kernel(a, gc, db, k, m, nn, false, false, true); // dB = A dC
                    } else {
                        matmul_kernel(gc, a, db, nn, m, k, true, false, true); // dB(stored) = dC^T A
                    }
                }
            }
            break;
        }
        case OpKind::add:
        case OpKind::sub: {
            const double sgn = n.op == OpKind::add ? 1.0 : -1.0;
            if (Tensor* ga = arg_grad(n.a))
                for (std::int64_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
            if (Tensor* gb = arg_grad(n.b)) {
                const std::int64_t bs = gb->size();
                const std::int64_t reps = g.size() / bs;
                for (std::int64_t r = 0; r < reps; ++r) {
                    const double* gr = g.data() + r * bs;
                    double* db = gb->data();
                    for (std::int64_t i = 0; i < bs; ++i) db[i] += sgn * gr[i];
                }
            }
            break;
        }
        case OpKind::mul: {
            const Tensor& A = nodes_[n.a].value;
            const Tensor& B = nodes_[n.b].value;
            const std::int64_t bs = B.size();
            const std::int64_t reps = g.size() / bs;
            if (Tensor* ga = arg_grad(n.a)) {
                for (std::int64_t r = 0; r < reps; ++r) {
                    const double* gr = g.data() + r * bs;
                    double* da = ga->data() + r * bs;
                    for (std::int64_t i = 0; i < bs; ++i) da[i] += gr[i] * B[i];
                }
            }
            if (Tensor* gb = arg_grad(n.b)) {
                for (std::int64_t r = 0; r < reps; ++r) {
                    const double* gr = g.data() + r * bs;
                    const double* ar = A.data() + r * bs;
                    double* db = gb->data();
                    for (std::int64_t i = 0; i < bs; ++i) db[i] += gr[i] * ar[i];
                }
            }
            break;
        }
        case OpKind::scale: {
            if (Tensor* ga = arg_grad(n.a))
                for (std::int64_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * n.scalar;
            break;
        }
        case OpKind::layer_norm: {
            Tensor* ga = arg_grad(n.a);
            if (!ga) break;
            const int d = n.value.shape().back();
            const std::int64_t rows = n.value.size() / d;
            for (std::int64_t r = 0; r < rows; ++r) {
                const double* y = n.value.data() + r * d;
                const double* gy = g.data() + r * d;
                double* gx = ga->data() + r * d;
                const double rstd = n.aux[r];
                double mg = 0.0, mgy = 0.0;
                for (int i = 0; i < d; ++i) {
                    mg += gy[i];
                    mgy += gy[i] * y[i];
                }
                mg /= d;
                mgy /= d;
                for (int i = 0; i < d; ++i) gx[i] += rstd * (gy[i] - mg - y[i] * mgy);
            }
            break;
        }
        case OpKind::softmax: {
            Tensor* ga = arg_grad(n.a);
            if (!ga) break;
            const int d = n.value.shape().back();
            const std::int64_t rows = n.value.size() / d;
            for (std::int64_t r = 0; r < rows; ++r) {
                const double* p = n.value.data() + r * d;
                const double* gy = g.data() + r * d;
                double* gx = ga->data() + r * d;
                double dot = 0.0;
                for (int i = 0; i < d; ++i) dot += gy[i] * p[i];
                for (int i = 0; i < d; ++i) gx[i] += p[i] * (gy[i] - dot);
            }
            break;
        }
        case OpKind::gelu: {
            Tensor* ga = arg_grad(n.a);
            if (!ga) break;
            const Tensor& A = nodes_[n.a].value;
            constexpr double inv_sqrt2 = 0.70710678118654752440;
            constexpr double inv_sqrt2pi = 0.39894228040143267794;
            for (std::int64_t i = 0; i < g.size(); ++i) {
                const double x = A[i];
                const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
                const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
                (*ga)[i] += g[i] * (cdf + x * pdf);
            }
            break;
        }
        case OpKind::relu: {
            Tensor* ga = arg_grad(n.a);
            if (!ga) break;
            const Tensor& A = nodes_[n.a].value;
            for (std::int64_t i = 0; i < g.size(); ++i)
                if (A[i] > 0.0) (*ga)[i] += g[i];
            break;
        }
        case OpKind::embed: {
            Tensor* ga = arg_grad(n.a);
            if (!ga) break;
            const int d = nodes_[n.a].value.shape()[1];
            for (std::size_t i = 0; i < n.ids.size(); ++i) {
                double* row = ga->data() + static_cast<std::int64_t>(n.ids[i]) * d;
                const double* gr = g.data() + static_cast<std::int64_t>(i) * d;
                for (int j = 0; j < d; ++j) row[j] += gr[j];
            }
            break;
        }
        case OpKind::reshape: {
            if (Tensor* ga = arg_grad(n.a))
                for (std::int64_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
            break;
        }
        case OpKind::transpose: {
            Tensor* ga = arg_grad(n.a);
            if (!ga) break;
            const auto& in = nodes_[n.a].value.shape();
            const int r = static_cast<int>(in.size());
            std::vector<std::int64_t> in_stride(r, 1), out_stride(r, 1);
            for (int i = r - 2; i >= 0; --i) in_stride[i] = in_stride[i + 1] * in[i + 1];
            const auto& os = n.value.shape();
            for (int i = r - 2; i >= 0; --i) out_stride[i] = out_stride[i + 1] * os[i + 1];
            std::vector<std::int64_t> src_stride(r);
            for (int i = 0; i < r; ++i) src_stride[i] = in_stride[n.perm[i]];
            std::vector<std::int64_t> idx(r, 0);
            double* da = ga->data();
            std::int64_t src = 0;
            for (std::int64_t oi = 0; oi < g.size(); ++oi) {
                da[src] += g[oi];
                for (int axis = r - 1; axis >= 0; --axis) {
                    if (++idx[axis] < os[axis]) {
                        src += src_stride[axis];
                        break;
                    }
                    src -= src_stride[axis] * (os[axis] - 1);
                    idx[axis] = 0;
                }
            }
            break;
        }
        case OpKind::reduce_sum:
        case OpKind::reduce_mean: {
            Tensor* ga = arg_grad(n.a);
            if (!ga) break;
            const double gv = n.op == OpKind::reduce_sum ? g[0] : g[0] / static_cast<double>(ga->size());
            for (std::int64_t i = 0; i < ga->size(); ++i) (*ga)[i] += gv;
            break;
        }
        case OpKind::cross_entropy: {
            Tensor* ga = arg_grad(n.a);
            if (!ga) break;
            const int c = n.aux.shape()[1];
            const std::int64_t rows = n.aux.shape()[0];
            const double inv_wsum = g[0] / n.scalar;
            for (std::int64_t r = 0; r < rows; ++r) {
                const double w = n.payload.empty() ? 1.0 : n.payload[static_cast<std::size_t>(r)];
                if (w == 0.0) continue;
                const double* p = n.aux.data() + r * c;
                double* gx = ga->data() + r * c;
                const double f = w * inv_wsum;
                for (int i = 0; i < c; ++i) gx[i] += f * p[i];
                gx[n.ids[static_cast<std::size_t>(r)]] -= f;
            }
            break;
        }
        case OpKind::mse: {
            Tensor* ga = arg_grad(n.a);
            if (!ga) break;
            const Tensor& P = nodes_[n.a].value;
            const double f = 2.0 * g[0] / static_cast<double>(P.size());
            for (std::int64_t i = 0; i < P.size(); ++i)
                (*ga)[i] += f * (P[i] - n.payload[static_cast<std::size_t>(i)]);
            break;
        }
    }
}

std::map<std::string, Tensor> Graph::backward(NodeId loss) {
    if (!forward_done_) throw std::logic_error("backward called before forward");
    Node& ln = nodes_.at(static_cast<std::size_t>(loss));
    if (ln.value.size() != 1) throw std::invalid_argument("backward: loss node is not scalar");

    for (Node& n : nodes_) {
        if (!n.requires_grad) continue;
        // a default-constructed grad shares the scalar's empty shape but has
        // no storage, so compare sizes rather than shapes
        if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape());
        else std::fill(n.grad.vec().begin(), n.grad.vec().end(), 0.0);
    }
    if (ln.requires_grad) {
        ln.grad[0] = 1.0;
        for (std::int64_t i = static_cast<std::int64_t>(loss); i >= 0; --i) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.requires_grad) eval_grad(n);
        }
    }

    std::map<std::string, Tensor> grads;
    for (const auto& [name, id] : params_) {
        const Node& p = nodes_[static_cast<std::size_t>(id)];
        grads[name] = p.grad.size() == p.value.size() ? p.grad : Tensor(p.value.shape());
    }
    return grads;
}

} // namespace specedge
