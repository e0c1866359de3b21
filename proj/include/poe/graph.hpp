#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "poe/common.hpp"
#include "poe/tensor.hpp"

namespace poe {

// Sanctioned operation set. Values are computed eagerly when a node is
// appended, so node order is a topological order by construction.
enum class Op {
    leaf,      // trainable parameter, named
    constant,  // non-trainable input
    matmul,
    add,        // same shape, or second operand a broadcast row [1,n]
    mul,        // same shape, or either operand a scalar [1,1]
    layer_norm, // row-wise, inputs (x, gamma, beta)
    softmax,    // row-wise
    gelu,
    relu,
    sigmoid,
    embedding,   // gather rows of input table by attribute ids
    reduce_sum,  // -> [1,1]
    reduce_mean, // -> [1,1]
    concat_rows,
    concat_cols,
    slice_rows,
    slice_cols,
    bce_with_logits,  // per-row loss against attribute targets, from logits
    squared_error,    // per-row (pred - target)^2
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::constant: return "constant";
        case Op::matmul: return "matmul";
        case Op::add: return "add";
        case Op::mul: return "mul";
        case Op::layer_norm: return "layer_norm";
        case Op::softmax: return "softmax";
        case Op::gelu: return "gelu";
        case Op::relu: return "relu";
        case Op::sigmoid: return "sigmoid";
        case Op::embedding: return "embedding";
        case Op::reduce_sum: return "reduce_sum";
        case Op::reduce_mean: return "reduce_mean";
        case Op::concat_rows: return "concat_rows";
        case Op::concat_cols: return "concat_cols";
        case Op::slice_rows: return "slice_rows";
        case Op::slice_cols: return "slice_cols";
        case Op::bce_with_logits: return "bce_with_logits";
        case Op::squared_error: return "squared_error";
    }
    return "?";
}

struct GraphNode {
    Op op = Op::constant;
    std::vector<int> inputs;
    Tensor value;
    Tensor grad;  // allocated during backward
    std::string name;  // leaves only
    // attributes
    bool trans_b = false;                // matmul
    double eps = 0.0;                    // layer_norm
    std::vector<std::int64_t> ids;       // embedding: row indices into the table
    std::vector<double> targets;         // loss nodes
    std::int64_t begin = 0, end = 0;     // slices
};

struct BackwardResult {
    double loss = 0.0;
    std::map<std::string, Tensor> grads;  // one entry per trainable leaf
};

// Sigmoid output is clamped into [kSigmoidFloor, 1 - kSigmoidFloor] so scores
// stay strictly inside (0,1) even when the logit saturates in f64.
inline constexpr double kSigmoidFloor = 1e-15;

inline double sigmoid_scalar(double z) {
    double y = (z >= 0.0) ? 1.0 / (1.0 + std::exp(-z))
                          : std::exp(z) / (1.0 + std::exp(z));
    if (y < kSigmoidFloor) {
        y = kSigmoidFloor;
    }
    if (y > 1.0 - kSigmoidFloor) {
        y = 1.0 - kSigmoidFloor;
    }
    return y;
}

inline double gelu_scalar(double x) {
    return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865476));
}

inline double gelu_grad_scalar(double x) {
    const double phi = 0.5 * (1.0 + std::erf(x * 0.7071067811865476));
    const double pdf = 0.3989422804014327 * std::exp(-0.5 * x * x);
    return phi + x * pdf;
}

class Graph {
public:
    int leaf(std::string name, Tensor value) {
        require(!name.empty(), ErrorKind::usage, "leaf requires a name");
        GraphNode node;
        node.op = Op::leaf;
        node.name = std::move(name);
        node.value = std::move(value);
        return append(std::move(node));
    }

    int constant(Tensor value) {
        GraphNode node;
        node.op = Op::constant;
        node.value = std::move(value);
        return append(std::move(node));
    }

    int matmul(int a, int b, bool trans_b = false) {
        const Tensor& ta = value(a);
        const Tensor& tb = value(b);
        const std::int64_t inner_b = trans_b ? tb.cols() : tb.rows();
        require(ta.cols() == inner_b, ErrorKind::usage,
                "matmul: inner dimensions mismatch " + ta.shape_string() + " x " + tb.shape_string());
        GraphNode node;
        node.op = Op::matmul;
        node.inputs = {a, b};
        node.trans_b = trans_b;
        node.value = Tensor::zeros(ta.rows(), trans_b ? tb.rows() : tb.cols());
        if (trans_b) {
            matmul_trans_b_acc(ta, tb, node.value);
        } else {
            matmul_acc(ta, tb, node.value);
        }
        return append(std::move(node));
    }

    int add(int a, int b) {
        const Tensor& ta = value(a);
        const Tensor& tb = value(b);
        const bool row_broadcast = !ta.same_shape(tb) && tb.rows() == 1 && tb.cols() == ta.cols();
        require(ta.same_shape(tb) || row_broadcast, ErrorKind::usage,
                "add: shape mismatch " + ta.shape_string() + " vs " + tb.shape_string());
        GraphNode node;
        node.op = Op::add;
        node.inputs = {a, b};
        node.value = ta;
        if (row_broadcast) {
            for (std::int64_t i = 0; i < ta.rows(); ++i) {
                for (std::int64_t j = 0; j < ta.cols(); ++j) {
                    node.value.at(i, j) += tb.at(0, j);
                }
            }
        } else {
            for (std::size_t i = 0; i < node.value.data().size(); ++i) {
                node.value[i] += tb[i];
            }
        }
        return append(std::move(node));
    }

    int mul(int a, int b) {
        const Tensor& ta = value(a);
        const Tensor& tb = value(b);
        require(ta.same_shape(tb) || ta.is_scalar() || tb.is_scalar(), ErrorKind::usage,
                "mul: shape mismatch " + ta.shape_string() + " vs " + tb.shape_string());
        GraphNode node;
        node.op = Op::mul;
        node.inputs = {a, b};
        if (ta.same_shape(tb)) {
            node.value = ta;
            for (std::size_t i = 0; i < node.value.data().size(); ++i) {
                node.value[i] *= tb[i];
            }
        } else if (tb.is_scalar()) {
            node.value = ta;
            const double s = tb.scalar_value();
            for (double& x : node.value.data()) {
                x *= s;
            }
        } else {
            node.value = tb;
            const double s = ta.scalar_value();
            for (double& x : node.value.data()) {
                x *= s;
            }
        }
        return append(std::move(node));
    }

    int layer_norm(int x, int gamma, int beta, double eps = 1e-5) {
        const Tensor& tx = value(x);
        const Tensor& tg = value(gamma);
        const Tensor& tb = value(beta);
        require(tg.numel() == tx.cols() && tb.numel() == tx.cols(), ErrorKind::usage,
                "layer_norm: gamma/beta size must match columns");
        GraphNode node;
        node.op = Op::layer_norm;
        node.inputs = {x, gamma, beta};
        node.eps = eps;
        node.value = Tensor::zeros(tx.rows(), tx.cols());
        const std::int64_t n = tx.cols();
        for (std::int64_t i = 0; i < tx.rows(); ++i) {
            double mean = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                mean += tx.at(i, j);
            }
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                const double d = tx.at(i, j) - mean;
                var += d * d;
            }
            var /= static_cast<double>(n);
            const double inv_sigma = 1.0 / std::sqrt(var + eps);
            for (std::int64_t j = 0; j < n; ++j) {
                const double xhat = (tx.at(i, j) - mean) * inv_sigma;
                node.value.at(i, j) = xhat * tg[static_cast<std::size_t>(j)] + tb[static_cast<std::size_t>(j)];
            }
        }
        return append(std::move(node));
    }

    int softmax(int x) {
        const Tensor& tx = value(x);
        GraphNode node;
        node.op = Op::softmax;
        node.inputs = {x};
        node.value = Tensor::zeros(tx.rows(), tx.cols());
        for (std::int64_t i = 0; i < tx.rows(); ++i) {
            double m = tx.at(i, 0);
            for (std::int64_t j = 1; j < tx.cols(); ++j) {
                m = std::max(m, tx.at(i, j));
            }
            double z = 0.0;
            for (std::int64_t j = 0; j < tx.cols(); ++j) {
                const double e = std::exp(tx.at(i, j) - m);
                node.value.at(i, j) = e;
                z += e;
            }
            for (std::int64_t j = 0; j < tx.cols(); ++j) {
                node.value.at(i, j) /= z;
            }
        }
        return append(std::move(node));
    }

    int gelu(int x) { return unary(Op::gelu, x, gelu_scalar); }

    int relu(int x) {
        return unary(Op::relu, x, [](double v) { return v > 0.0 ? v : 0.0; });
    }

    int sigmoid(int x) { return unary(Op::sigmoid, x, sigmoid_scalar); }

    int embedding(int table, std::vector<std::int64_t> ids) {
        const Tensor& tt = value(table);
        require(!ids.empty(), ErrorKind::usage, "embedding: empty id list");
        for (std::int64_t id : ids) {
            require(id >= 0 && id < tt.rows(), ErrorKind::usage, "embedding: id out of range");
        }
        GraphNode node;
        node.op = Op::embedding;
        node.inputs = {table};
        node.value = Tensor::zeros(static_cast<std::int64_t>(ids.size()), tt.cols());
        for (std::size_t r = 0; r < ids.size(); ++r) {
            for (std::int64_t j = 0; j < tt.cols(); ++j) {
                node.value.at(static_cast<std::int64_t>(r), j) = tt.at(ids[r], j);
            }
        }
        node.ids = std::move(ids);
        return append(std::move(node));
    }

    int reduce_sum(int x) { return reduction(Op::reduce_sum, x); }
    int reduce_mean(int x) { return reduction(Op::reduce_mean, x); }

    int concat_rows(const std::vector<int>& xs) { return concat(Op::concat_rows, xs); }
    int concat_cols(const std::vector<int>& xs) { return concat(Op::concat_cols, xs); }

    int slice_rows(int x, std::int64_t r0, std::int64_t r1) {
        const Tensor& tx = value(x);
        require(0 <= r0 && r0 < r1 && r1 <= tx.rows(), ErrorKind::usage, "slice_rows: bad range");
        GraphNode node;
        node.op = Op::slice_rows;
        node.inputs = {x};
        node.begin = r0;
        node.end = r1;
        node.value = Tensor::zeros(r1 - r0, tx.cols());
        for (std::int64_t i = r0; i < r1; ++i) {
            for (std::int64_t j = 0; j < tx.cols(); ++j) {
                node.value.at(i - r0, j) = tx.at(i, j);
            }
        }
        return append(std::move(node));
    }

    int slice_cols(int x, std::int64_t c0, std::int64_t c1) {
        const Tensor& tx = value(x);
        require(0 <= c0 && c0 < c1 && c1 <= tx.cols(), ErrorKind::usage, "slice_cols: bad range");
        GraphNode node;
        node.op = Op::slice_cols;
        node.inputs = {x};
        node.begin = c0;
        node.end = c1;
        node.value = Tensor::zeros(tx.rows(), c1 - c0);
        for (std::int64_t i = 0; i < tx.rows(); ++i) {
            for (std::int64_t j = c0; j < c1; ++j) {
                node.value.at(i, j - c0) = tx.at(i, j);
            }
        }
        return append(std::move(node));
    }

    // Per-row binary cross-entropy from logits:
    //   loss = max(z,0) - y*z + log1p(exp(-|z|))
    // which equals -(y*log(sigmoid(z)) + (1-y)*log(1-sigmoid(z))) and stays
    // finite for any finite logit.
    int bce_with_logits(int logits, std::vector<double> targets) {
        const Tensor& tz = value(logits);
        require(tz.cols() == 1, ErrorKind::usage, "bce_with_logits: expects a column of logits");
        require(static_cast<std::int64_t>(targets.size()) == tz.rows(), ErrorKind::usage,
                "bce_with_logits: target count mismatch");
        for (double y : targets) {
            require(y == 0.0 || y == 1.0, ErrorKind::usage, "bce_with_logits: targets must be 0/1");
        }
        GraphNode node;
        node.op = Op::bce_with_logits;
        node.inputs = {logits};
        node.value = Tensor::zeros(tz.rows(), 1);
        for (std::int64_t i = 0; i < tz.rows(); ++i) {
            const double z = tz.at(i, 0);
            const double y = targets[static_cast<std::size_t>(i)];
            node.value.at(i, 0) = std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
        }
        node.targets = std::move(targets);
        return append(std::move(node));
    }

    int squared_error(int pred, std::vector<double> targets) {
        const Tensor& tp = value(pred);
        require(tp.cols() == 1, ErrorKind::usage, "squared_error: expects a column of predictions");
        require(static_cast<std::int64_t>(targets.size()) == tp.rows(), ErrorKind::usage,
                "squared_error: target count mismatch");
        GraphNode node;
        node.op = Op::squared_error;
        node.inputs = {pred};
        node.value = Tensor::zeros(tp.rows(), 1);
        for (std::int64_t i = 0; i < tp.rows(); ++i) {
            const double d = tp.at(i, 0) - targets[static_cast<std::size_t>(i)];
            node.value.at(i, 0) = d * d;
        }
        node.targets = std::move(targets);
        return append(std::move(node));
    }

    const Tensor& value(int id) const {
        require(id >= 0 && id < static_cast<int>(nodes_.size()), ErrorKind::usage, "bad node id");
        return nodes_[static_cast<std::size_t>(id)].value;
    }

    const GraphNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    int size() const { return static_cast<int>(nodes_.size()); }

    // Reverse-mode sweep from a scalar loss node. Nodes are visited in
    // descending id order (reverse topological), and every contribution is
    // accumulated with += in that fixed order, so results are reproducible
    // bit for bit. Returns a gradient for every trainable leaf in the graph.
    BackwardResult forward_backward(int loss_node) {
        require(loss_node >= 0 && loss_node < size(), ErrorKind::usage, "forward_backward: bad loss node");
        require(value(loss_node).is_scalar(), ErrorKind::numeric,
                "forward_backward: loss node " + std::to_string(loss_node) + " is not scalar");

        for (auto& n : nodes_) {
            n.grad = Tensor(n.value.shape());
        }
        nodes_[static_cast<std::size_t>(loss_node)].grad = Tensor::full(value(loss_node).shape(), 1.0);

        for (int id = loss_node; id >= 0; --id) {
            backward_node(id);
        }

        BackwardResult result;
        result.loss = value(loss_node).scalar_value();
        for (auto& n : nodes_) {
            if (n.op == Op::leaf) {
                require(n.grad.all_finite(), ErrorKind::numeric,
                        "non-finite gradient for leaf '" + n.name + "'");
                result.grads.emplace(n.name, n.grad);
            }
        }
        return result;
    }

private:
    int append(GraphNode node) {
        if (!node.value.all_finite()) {
            fail(ErrorKind::numeric, "non-finite value produced by node " +
                                         std::to_string(nodes_.size()) + " (" + op_name(node.op) + ")");
        }
        nodes_.push_back(std::move(node));
        return static_cast<int>(nodes_.size()) - 1;
    }

    template <typename F>
    int unary(Op op, int x, F&& f) {
        GraphNode node;
        node.op = op;
        node.inputs = {x};
        node.value = value(x);
        for (double& v : node.value.data()) {
            v = f(v);
        }
        return append(std::move(node));
    }

    int reduction(Op op, int x) {
        const Tensor& tx = value(x);
        GraphNode node;
        node.op = op;
        node.inputs = {x};
        double s = 0.0;
        for (double v : tx.data()) {
            s += v;
        }
        if (op == Op::reduce_mean) {
            s /= static_cast<double>(tx.numel());
        }
        node.value = Tensor::scalar(s);
        return append(std::move(node));
    }

    int concat(Op op, const std::vector<int>& xs) {
        require(!xs.empty(), ErrorKind::usage, "concat: no inputs");
        const bool by_rows = (op == Op::concat_rows);
        const Tensor& first = value(xs[0]);
        std::int64_t total = 0;
        for (int x : xs) {
            const Tensor& t = value(x);
            if (by_rows) {
                require(t.cols() == first.cols(), ErrorKind::usage, "concat_rows: column mismatch");
                total += t.rows();
            } else {
                require(t.rows() == first.rows(), ErrorKind::usage, "concat_cols: row mismatch");
                total += t.cols();
            }
        }
        GraphNode node;
        node.op = op;
        node.inputs = xs;
        node.value = by_rows ? Tensor::zeros(total, first.cols()) : Tensor::zeros(first.rows(), total);
        std::int64_t offset = 0;
        for (int x : xs) {
            const Tensor& t = value(x);
            for (std::int64_t i = 0; i < t.rows(); ++i) {
                for (std::int64_t j = 0; j < t.cols(); ++j) {
                    if (by_rows) {
                        node.value.at(offset + i, j) = t.at(i, j);
                    } else {
                        node.value.at(i, offset + j) = t.at(i, j);
                    }
                }
            }
            offset += by_rows ? t.rows() : t.cols();
        }
        return append(std::move(node));
    }

    Tensor& grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

    void backward_node(int id) {
        GraphNode& n = nodes_[static_cast<std::size_t>(id)];
        if (n.op == Op::leaf || n.op == Op::constant) {
            return;
        }
        const Tensor& g = n.grad;

        switch (n.op) {
            case Op::matmul: {
                const Tensor& a = value(n.inputs[0]);
                const Tensor& b = value(n.inputs[1]);
                Tensor& ga = grad(n.inputs[0]);
                Tensor& gb = grad(n.inputs[1]);
                if (!n.trans_b) {
                    // C = A*B: dA += dC*B^T, dB += A^T*dC
                    matmul_trans_b_acc(g, b, ga);
                    matmul_trans_a_acc(a, g, gb);
                } else {
                    // C = A*B^T: dA += dC*B, dB += dC^T*A
                    matmul_acc(g, b, ga);
                    matmul_trans_a_acc(g, a, gb);
                }
                break;
            }
            case Op::add: {
                Tensor& ga = grad(n.inputs[0]);
                Tensor& gb = grad(n.inputs[1]);
                for (std::size_t i = 0; i < g.data().size(); ++i) {
                    ga[i] += g[i];
                }
                if (gb.same_shape(g)) {
                    for (std::size_t i = 0; i < g.data().size(); ++i) {
                        gb[i] += g[i];
                    }
                } else {
                    for (std::int64_t i = 0; i < g.rows(); ++i) {
                        for (std::int64_t j = 0; j < g.cols(); ++j) {
                            gb.at(0, j) += g.at(i, j);
                        }
                    }
                }
                break;
            }
            case Op::mul: {
                const Tensor& a = value(n.inputs[0]);
                const Tensor& b = value(n.inputs[1]);
                Tensor& ga = grad(n.inputs[0]);
                Tensor& gb = grad(n.inputs[1]);
                if (a.same_shape(b)) {
                    for (std::size_t i = 0; i < g.data().size(); ++i) {
                        ga[i] += g[i] * b[i];
                        gb[i] += g[i] * a[i];
                    }
                } else if (b.is_scalar()) {
                    const double s = b.scalar_value();
                    for (std::size_t i = 0; i < g.data().size(); ++i) {
                        ga[i] += g[i] * s;
                        gb[0] += g[i] * a[i];
                    }
                } else {
                    const double s = a.scalar_value();
                    for (std::size_t i = 0; i < g.data().size(); ++i) {
                        gb[i] += g[i] * s;
                        ga[0] += g[i] * b[i];
                    }
                }
                break;
            }
            case Op::layer_norm: {
                backward_layer_norm(n);
                break;
            }
            case Op::softmax: {
                Tensor& gx = grad(n.inputs[0]);
                const Tensor& y = n.value;
                for (std::int64_t i = 0; i < y.rows(); ++i) {
                    double dot = 0.0;
                    for (std::int64_t j = 0; j < y.cols(); ++j) {
                        dot += g.at(i, j) * y.at(i, j);
                    }
                    for (std::int64_t j = 0; j < y.cols(); ++j) {
                        gx.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
                    }
                }
                break;
            }
            case Op::gelu: {
                const Tensor& x = value(n.inputs[0]);
                Tensor& gx = grad(n.inputs[0]);
                for (std::size_t i = 0; i < g.data().size(); ++i) {
                    gx[i] += g[i] * gelu_grad_scalar(x[i]);
                }
                break;
            }
            case Op::relu: {
                const Tensor& x = value(n.inputs[0]);
                Tensor& gx = grad(n.inputs[0]);
                for (std::size_t i = 0; i < g.data().size(); ++i) {
                    gx[i] += x[i] > 0.0 ? g[i] : 0.0;
                }
                break;
            }
            case Op::sigmoid: {
                const Tensor& y = n.value;
                Tensor& gx = grad(n.inputs[0]);
                for (std::size_t i = 0; i < g.data().size(); ++i) {
                    gx[i] += g[i] * y[i] * (1.0 - y[i]);
                }
                break;
            }
            case Op::embedding: {
                Tensor& gt = grad(n.inputs[0]);
                for (std::size_t r = 0; r < n.ids.size(); ++r) {
                    for (std::int64_t j = 0; j < g.cols(); ++j) {
                        gt.at(n.ids[r], j) += g.at(static_cast<std::int64_t>(r), j);
                    }
                }
                break;
            }
            case Op::reduce_sum: {
                Tensor& gx = grad(n.inputs[0]);
                const double s = g.scalar_value();
                for (double& v : gx.data()) {
                    v += s;
                }
                break;
            }
            case Op::reduce_mean: {
                Tensor& gx = grad(n.inputs[0]);
                const double s = g.scalar_value() / static_cast<double>(gx.numel());
                for (double& v : gx.data()) {
                    v += s;
                }
                break;
            }
            case Op::concat_rows:
            case Op::concat_cols: {
                const bool by_rows = (n.op == Op::concat_rows);
                std::int64_t offset = 0;
                for (int x : n.inputs) {
                    Tensor& gx = grad(x);
                    for (std::int64_t i = 0; i < gx.rows(); ++i) {
                        for (std::int64_t j = 0; j < gx.cols(); ++j) {
                            gx.at(i, j) += by_rows ? g.at(offset + i, j) : g.at(i, offset + j);
                        }
                    }
                    offset += by_rows ? gx.rows() : gx.cols();
                }
                break;
            }
            case Op::slice_rows: {
                Tensor& gx = grad(n.inputs[0]);
                for (std::int64_t i = n.begin; i < n.end; ++i) {
                    for (std::int64_t j = 0; j < gx.cols(); ++j) {
                        gx.at(i, j) += g.at(i - n.begin, j);
                    }
                }
                break;
            }
            case Op::slice_cols: {
                Tensor& gx = grad(n.inputs[0]);
                for (std::int64_t i = 0; i < gx.rows(); ++i) {
                    for (std::int64_t j = n.begin; j < n.end; ++j) {
                        gx.at(i, j) += g.at(i, j - n.begin);
                    }
                }
                break;
            }
            case Op::bce_with_logits: {
                const Tensor& z = value(n.inputs[0]);
                Tensor& gz = grad(n.inputs[0]);
                for (std::int64_t i = 0; i < z.rows(); ++i) {
                    const double y = n.targets[static_cast<std::size_t>(i)];
                    gz.at(i, 0) += g.at(i, 0) * (sigmoid_scalar(z.at(i, 0)) - y);
                }
                break;
            }
            case Op::squared_error: {
                const Tensor& p = value(n.inputs[0]);
                Tensor& gp = grad(n.inputs[0]);
                for (std::int64_t i = 0; i < p.rows(); ++i) {
                    gp.at(i, 0) += g.at(i, 0) * 2.0 * (p.at(i, 0) - n.targets[static_cast<std::size_t>(i)]);
                }
                break;
            }
            case Op::leaf:
            case Op::constant:
                break;
        }
    }

    void backward_layer_norm(GraphNode& n) {
        const Tensor& x = value(n.inputs[0]);
        const Tensor& gm = value(n.inputs[1]);
        const Tensor& g = n.grad;
        Tensor& gx = grad(n.inputs[0]);
        Tensor& ggamma = grad(n.inputs[1]);
        Tensor& gbeta = grad(n.inputs[2]);
        const std::int64_t cols = x.cols();
        const double inv_n = 1.0 / static_cast<double>(cols);

        for (std::int64_t i = 0; i < x.rows(); ++i) {
            double mean = 0.0;
            for (std::int64_t j = 0; j < cols; ++j) {
                mean += x.at(i, j);
            }
            mean *= inv_n;
            double var = 0.0;
            for (std::int64_t j = 0; j < cols; ++j) {
                const double d = x.at(i, j) - mean;
                var += d * d;
            }
            var *= inv_n;
            const double inv_sigma = 1.0 / std::sqrt(var + n.eps);

            // dxhat = dy * gamma; dx = inv_sigma * (dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
            double sum_dxhat = 0.0;
            double sum_dxhat_xhat = 0.0;
            for (std::int64_t j = 0; j < cols; ++j) {
                const double xhat = (x.at(i, j) - mean) * inv_sigma;
                const double dy = g.at(i, j);
                const double dxhat = dy * gm[static_cast<std::size_t>(j)];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat;
                ggamma[static_cast<std::size_t>(j)] += dy * xhat;
                gbeta[static_cast<std::size_t>(j)] += dy;
            }
            const double mean_dxhat = sum_dxhat * inv_n;
            const double mean_dxhat_xhat = sum_dxhat_xhat * inv_n;
            for (std::int64_t j = 0; j < cols; ++j) {
                const double xhat = (x.at(i, j) - mean) * inv_sigma;
                const double dxhat = g.at(i, j) * gm[static_cast<std::size_t>(j)];
                gx.at(i, j) += inv_sigma * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
            }
        }
    }

    std::vector<GraphNode> nodes_;
};

}  // namespace poe
