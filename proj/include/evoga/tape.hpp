#ifndef EVOGA_TAPE_HPP
#define EVOGA_TAPE_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "evoga/mat.hpp"

namespace evoga {

// Reverse-mode autodiff over an append-only tape of dense matrix ops.
//
// Two backward paths are provided:
//   backward()          numeric adjoints, used for ordinary training steps;
//   backward_as_graph() emits the adjoints as new tape nodes built from the
//                       same primitive set, so a gradient (e.g. the gradient
//                       penalty's input gradient) can itself be differentiated.

enum class Op {
    Constant,
    Parameter,
    Matmul,
    Add,       // same-shape elementwise
    AddBias,   // rows x cols + 1 x cols, row-broadcast
    Sub,
    Mul,       // elementwise
    Div,       // elementwise
    ScalarMul,
    Relu,
    Sigmoid,
    Tanh,
    Log,
    ClampMin,
    Square,
    Abs,
    Sum,        // over all entries -> 1x1
    Mean,       // over all entries -> 1x1
    RowL2Norm,  // rows x cols -> rows x 1
    ConcatRows,
    Transpose,
    SumRows,          // rows x cols -> 1 x cols
    SumCols,          // rows x cols -> rows x 1
    BroadcastRows,    // 1 x cols -> rows x cols
    BroadcastCols,    // rows x 1 -> rows x cols
    BroadcastScalar,  // 1x1 -> rows x cols
    Heaviside,        // 1 where x >= threshold else 0; derivative zero
    Sign,             // -1/0/1; derivative zero
    SliceRows,
    PadRows,  // embed into a taller zero matrix at a row offset
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::Constant: return "constant";
        case Op::Parameter: return "parameter";
        case Op::Matmul: return "matmul";
        case Op::Add: return "add";
        case Op::AddBias: return "add_bias";
        case Op::Sub: return "subtract";
        case Op::Mul: return "multiply";
        case Op::Div: return "divide";
        case Op::ScalarMul: return "scalar_multiply";
        case Op::Relu: return "relu";
        case Op::Sigmoid: return "sigmoid";
        case Op::Tanh: return "tanh";
        case Op::Log: return "log";
        case Op::ClampMin: return "clamp_min";
        case Op::Square: return "square";
        case Op::Abs: return "abs";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::RowL2Norm: return "row_l2_norm";
        case Op::ConcatRows: return "concat_rows";
        case Op::Transpose: return "transpose";
        case Op::SumRows: return "sum_rows";
        case Op::SumCols: return "sum_cols";
        case Op::BroadcastRows: return "broadcast_rows";
        case Op::BroadcastCols: return "broadcast_cols";
        case Op::BroadcastScalar: return "broadcast_scalar";
        case Op::Heaviside: return "heaviside";
        case Op::Sign: return "sign";
        case Op::SliceRows: return "slice_rows";
        case Op::PadRows: return "pad_rows";
    }
    return "?";
}

using NodeId = int;

struct Node {
    Op op;
    NodeId in0 = -1;
    NodeId in1 = -1;
    double payload = 0.0;  // scale factor / clamp floor / heaviside threshold
    int aux0 = 0;          // broadcast extent or row offset
    int aux1 = 0;          // slice length / pad height
    Mat value;
};

class Tape {
public:
    const Node& node(NodeId id) const { return nodes_[id]; }
    const Mat& value(NodeId id) const { return nodes_[id].value; }
    size_t size() const { return nodes_.size(); }

    NodeId constant(Mat v) { return push({Op::Constant, -1, -1, 0, 0, 0, std::move(v)}); }
    NodeId constant_scalar(double x) { return constant(Mat::scalar(x)); }
    NodeId parameter(Mat v) { return push({Op::Parameter, -1, -1, 0, 0, 0, std::move(v)}); }

    NodeId matmul(NodeId a, NodeId b) {
        return push({Op::Matmul, a, b, 0, 0, 0, evoga::matmul(val(a), val(b))});
    }
    NodeId add(NodeId a, NodeId b) {
        return push({Op::Add, a, b, 0, 0, 0, val(a) + val(b)});
    }
    // rows x cols plus a 1 x cols bias row.
    NodeId add_bias(NodeId a, NodeId bias) {
        const Mat& x = val(a);
        const Mat& b = val(bias);
        if (b.rows() != 1 || b.cols() != x.cols())
            throw shape_error("add_bias: " + x.shape_str() + " + " + b.shape_str());
        Mat out = x;
        for (int r = 0; r < out.rows(); ++r)
            for (int c = 0; c < out.cols(); ++c) out(r, c) += b(0, c);
        return push({Op::AddBias, a, bias, 0, 0, 0, std::move(out)});
    }
    NodeId sub(NodeId a, NodeId b) {
        return push({Op::Sub, a, b, 0, 0, 0, val(a) - val(b)});
    }
    NodeId mul(NodeId a, NodeId b) {
        return push({Op::Mul, a, b, 0, 0, 0, hadamard(val(a), val(b))});
    }
    NodeId div(NodeId a, NodeId b) {
        Mat out = zip(val(a), val(b), "divide", [](double x, double y) { return x / y; });
        return push({Op::Div, a, b, 0, 0, 0, std::move(out)});
    }
    NodeId scalar_mul(NodeId a, double s) {
        return push({Op::ScalarMul, a, -1, s, 0, 0, val(a) * s});
    }
    NodeId relu(NodeId a) {
        return push({Op::Relu, a, -1, 0, 0, 0,
                     map(val(a), [](double x) { return x > 0 ? x : 0.0; })});
    }
    NodeId sigmoid(NodeId a) {
        return push({Op::Sigmoid, a, -1, 0, 0, 0,
                     map(val(a), [](double x) { return 1.0 / (1.0 + std::exp(-x)); })});
    }
    NodeId tanh(NodeId a) {
        return push({Op::Tanh, a, -1, 0, 0, 0, map(val(a), [](double x) { return std::tanh(x); })});
    }
    NodeId log(NodeId a) {
        return push({Op::Log, a, -1, 0, 0, 0, map(val(a), [](double x) { return std::log(x); })});
    }
    NodeId clamp_min(NodeId a, double floor) {
        return push({Op::ClampMin, a, -1, floor, 0, 0,
                     map(val(a), [floor](double x) { return x < floor ? floor : x; })});
    }
    NodeId square(NodeId a) {
        return push({Op::Square, a, -1, 0, 0, 0, map(val(a), [](double x) { return x * x; })});
    }
    NodeId abs(NodeId a) {
        return push({Op::Abs, a, -1, 0, 0, 0, map(val(a), [](double x) { return std::fabs(x); })});
    }
    NodeId sum(NodeId a) {
        double s = 0;
        for (size_t i = 0; i < val(a).size(); ++i) s += val(a)[i];
        return push({Op::Sum, a, -1, 0, 0, 0, Mat::scalar(s)});
    }
    NodeId mean(NodeId a) {
        double s = 0;
        for (size_t i = 0; i < val(a).size(); ++i) s += val(a)[i];
        return push({Op::Mean, a, -1, 0, 0, 0, Mat::scalar(s / static_cast<double>(val(a).size()))});
    }
    NodeId row_l2_norm(NodeId a) {
        const Mat& x = val(a);
        Mat out(x.rows(), 1);
        for (int r = 0; r < x.rows(); ++r) {
            double s = 0;
            for (int c = 0; c < x.cols(); ++c) s += x(r, c) * x(r, c);
            out(r, 0) = std::sqrt(s);
        }
        return push({Op::RowL2Norm, a, -1, 0, 0, 0, std::move(out)});
    }
    NodeId concat_rows(NodeId a, NodeId b) {
        const Mat& x = val(a);
        const Mat& y = val(b);
        if (x.cols() != y.cols())
            throw shape_error("concat_rows: " + x.shape_str() + " with " + y.shape_str());
        Mat out(x.rows() + y.rows(), x.cols());
        for (int r = 0; r < x.rows(); ++r)
            for (int c = 0; c < x.cols(); ++c) out(r, c) = x(r, c);
        for (int r = 0; r < y.rows(); ++r)
            for (int c = 0; c < y.cols(); ++c) out(x.rows() + r, c) = y(r, c);
        return push({Op::ConcatRows, a, b, 0, 0, 0, std::move(out)});
    }
    NodeId transpose(NodeId a) {
        return push({Op::Transpose, a, -1, 0, 0, 0, evoga::transpose(val(a))});
    }
    NodeId sum_rows(NodeId a) {
        const Mat& x = val(a);
        Mat out(1, x.cols());
        for (int r = 0; r < x.rows(); ++r)
            for (int c = 0; c < x.cols(); ++c) out(0, c) += x(r, c);
        return push({Op::SumRows, a, -1, 0, 0, 0, std::move(out)});
    }
    NodeId sum_cols(NodeId a) {
        const Mat& x = val(a);
        Mat out(x.rows(), 1);
        for (int r = 0; r < x.rows(); ++r)
            for (int c = 0; c < x.cols(); ++c) out(r, 0) += x(r, c);
        return push({Op::SumCols, a, -1, 0, 0, 0, std::move(out)});
    }
    NodeId broadcast_rows(NodeId a, int rows) {
        const Mat& x = val(a);
        if (x.rows() != 1) throw shape_error("broadcast_rows: source not 1-row, " + x.shape_str());
        Mat out(rows, x.cols());
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < x.cols(); ++c) out(r, c) = x(0, c);
        return push({Op::BroadcastRows, a, -1, 0, rows, 0, std::move(out)});
    }
    NodeId broadcast_cols(NodeId a, int cols) {
        const Mat& x = val(a);
        if (x.cols() != 1) throw shape_error("broadcast_cols: source not 1-col, " + x.shape_str());
        Mat out(x.rows(), cols);
        for (int r = 0; r < x.rows(); ++r)
            for (int c = 0; c < cols; ++c) out(r, c) = x(r, 0);
        return push({Op::BroadcastCols, a, -1, 0, cols, 0, std::move(out)});
    }
    NodeId broadcast_scalar(NodeId a, int rows, int cols) {
        const Mat& x = val(a);
        if (x.size() != 1) throw shape_error("broadcast_scalar: source not 1x1, " + x.shape_str());
        return push({Op::BroadcastScalar, a, -1, 0, rows, cols, Mat(rows, cols, x[0])});
    }
    NodeId heaviside(NodeId a, double threshold = 0.0) {
        return push({Op::Heaviside, a, -1, threshold, 0, 0,
                     map(val(a), [threshold](double x) { return x >= threshold ? 1.0 : 0.0; })});
    }
    NodeId sign(NodeId a) {
        return push({Op::Sign, a, -1, 0, 0, 0,
                     map(val(a), [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); })});
    }
    NodeId slice_rows(NodeId a, int offset, int count) {
        const Mat& x = val(a);
        if (offset < 0 || count < 0 || offset + count > x.rows())
            throw shape_error("slice_rows: [" + std::to_string(offset) + "," +
                              std::to_string(offset + count) + ") out of " + x.shape_str());
        Mat out(count, x.cols());
        for (int r = 0; r < count; ++r)
            for (int c = 0; c < x.cols(); ++c) out(r, c) = x(offset + r, c);
        return push({Op::SliceRows, a, -1, 0, offset, count, std::move(out)});
    }
    NodeId pad_rows(NodeId a, int offset, int total_rows) {
        const Mat& x = val(a);
        if (offset < 0 || offset + x.rows() > total_rows)
            throw shape_error("pad_rows: offset " + std::to_string(offset) + " for " +
                              x.shape_str() + " into " + std::to_string(total_rows) + " rows");
        Mat out(total_rows, x.cols());
        for (int r = 0; r < x.rows(); ++r)
            for (int c = 0; c < x.cols(); ++c) out(offset + r, c) = x(r, c);
        return push({Op::PadRows, a, -1, 0, offset, total_rows, std::move(out)});
    }

    // Gradient of a 1x1 scalar node w.r.t. every Parameter node on the tape.
    // Parameters the scalar does not depend on get zero gradients.
    std::unordered_map<NodeId, Mat> backward(NodeId scalar) const {
        require_scalar(scalar, "backward");
        // Only propagate adjoints into subgraphs that can reach a parameter;
        // everything else (inputs, frozen networks) is dead weight.
        std::vector<char> needs(scalar + 1, 0);
        for (NodeId id = 0; id <= scalar; ++id) {
            const Node& n = nodes_[id];
            needs[id] = n.op == Op::Parameter || (n.in0 >= 0 && needs[n.in0]) ||
                        (n.in1 >= 0 && needs[n.in1]);
        }
        std::vector<Mat> adj(scalar + 1);
        adj[scalar] = Mat::scalar(1.0);
        for (NodeId id = scalar; id >= 0; --id) {
            if (adj[id].size() == 0 || !needs[id]) continue;
            accumulate_numeric(id, adj, needs);
        }
        std::unordered_map<NodeId, Mat> grads;
        for (NodeId id = 0; id < static_cast<NodeId>(nodes_.size()); ++id) {
            if (nodes_[id].op != Op::Parameter) continue;
            if (id <= scalar && adj[id].size() != 0)
                grads.emplace(id, std::move(adj[id]));
            else
                grads.emplace(id, Mat(nodes_[id].value.rows(), nodes_[id].value.cols()));
        }
        return grads;
    }

    // Like backward(), but the adjoints are recorded as tape nodes so they can
    // be differentiated again. Returns one gradient node per `wrt` entry.
    std::vector<NodeId> backward_as_graph(NodeId scalar, const std::vector<NodeId>& wrt) {
        require_scalar(scalar, "backward_as_graph");
        // Emit only adjoint nodes on paths to a requested target; the rest
        // would be computed (forward values and all) and never read.
        std::vector<char> needs(scalar + 1, 0);
        for (NodeId w : wrt)
            if (w <= scalar) needs[w] = 1;
        for (NodeId id = 0; id <= scalar; ++id) {
            const Node& n = nodes_[id];
            if ((n.in0 >= 0 && needs[n.in0]) || (n.in1 >= 0 && needs[n.in1])) needs[id] = 1;
        }
        std::vector<NodeId> adj(scalar + 1, -1);
        adj[scalar] = constant_scalar(1.0);
        for (NodeId id = scalar; id >= 0; --id) {
            if (adj[id] < 0 || !needs[id]) continue;
            emit_graph_adjoints(id, adj, needs);
        }
        std::vector<NodeId> out;
        out.reserve(wrt.size());
        for (NodeId w : wrt) {
            if (w <= scalar && adj[w] >= 0) {
                out.push_back(adj[w]);
            } else {
                const Mat& v = value(w);
                out.push_back(constant(Mat(v.rows(), v.cols())));
            }
        }
        return out;
    }

private:
    std::vector<Node> nodes_;

    const Mat& val(NodeId id) const { return nodes_[id].value; }

    NodeId push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    void require_scalar(NodeId id, const char* who) const {
        const Mat& v = val(id);
        if (v.rows() != 1 || v.cols() != 1)
            throw shape_error(std::string(who) + ": node is " + v.shape_str() + ", expected 1x1");
    }

    static bool wants(const std::vector<char>& needs, NodeId id) {
        return id >= 0 && needs[id];
    }

    static void acc(std::vector<Mat>& adj, NodeId id, Mat g) {
        if (adj[id].size() == 0)
            adj[id] = std::move(g);
        else
            axpy(adj[id], g);
    }

    void accumulate_numeric(NodeId id, std::vector<Mat>& adj, const std::vector<char>& needs) const {
        const Node& n = nodes_[id];
        const Mat& g = adj[id];
        auto acc = [&adj, &needs](NodeId to, Mat gg) {
            if (wants(needs, to)) Tape::acc(adj, to, std::move(gg));
        };
        switch (n.op) {
            case Op::Constant:
            case Op::Parameter:
                break;
            case Op::Matmul:
                // guarded individually: each side is a full GEMM
                if (wants(needs, n.in0)) acc(n.in0, matmul_nt(g, val(n.in1)));
                if (wants(needs, n.in1)) acc(n.in1, matmul_tn(val(n.in0), g));
                break;
            case Op::Add:
                acc(n.in0, g);
                acc(n.in1, g);
                break;
            case Op::AddBias: {
                acc(n.in0, g);
                Mat gb(1, g.cols());
                for (int r = 0; r < g.rows(); ++r)
                    for (int c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
                acc(n.in1, std::move(gb));
                break;
            }
            case Op::Sub:
                acc(n.in0, g);
                acc(n.in1, g * -1.0);
                break;
            case Op::Mul:
                acc(n.in0, hadamard(g, val(n.in1)));
                acc(n.in1, hadamard(g, val(n.in0)));
                break;
            case Op::Div: {
                const Mat& a = val(n.in0);
                const Mat& b = val(n.in1);
                acc(n.in0, zip(g, b, "div", [](double gg, double y) { return gg / y; }));
                Mat gb(g.rows(), g.cols());
                for (size_t i = 0; i < g.size(); ++i) gb[i] = -g[i] * a[i] / (b[i] * b[i]);
                acc(n.in1, std::move(gb));
                break;
            }
            case Op::ScalarMul:
                acc(n.in0, g * n.payload);
                break;
            case Op::Relu:
                acc(n.in0, zip(g, val(n.in0), "relu'",
                                    [](double gg, double x) { return x > 0 ? gg : 0.0; }));
                break;
            case Op::Sigmoid:
                acc(n.in0, zip(g, n.value, "sigmoid'",
                                    [](double gg, double y) { return gg * y * (1.0 - y); }));
                break;
            case Op::Tanh:
                acc(n.in0, zip(g, n.value, "tanh'",
                                    [](double gg, double y) { return gg * (1.0 - y * y); }));
                break;
            case Op::Log:
                acc(n.in0,
                    zip(g, val(n.in0), "log'", [](double gg, double x) { return gg / x; }));
                break;
            case Op::ClampMin: {
                double floor = n.payload;
                acc(n.in0, zip(g, val(n.in0), "clamp'",
                                    [floor](double gg, double x) { return x >= floor ? gg : 0.0; }));
                break;
            }
            case Op::Square:
                acc(n.in0, zip(g, val(n.in0), "square'",
                                    [](double gg, double x) { return 2.0 * gg * x; }));
                break;
            case Op::Abs:
                acc(n.in0, zip(g, val(n.in0), "abs'", [](double gg, double x) {
                        return x > 0 ? gg : (x < 0 ? -gg : 0.0);
                    }));
                break;
            case Op::Sum:
                acc(n.in0, Mat(val(n.in0).rows(), val(n.in0).cols(), g[0]));
                break;
            case Op::Mean:
                acc(n.in0,
                    Mat(val(n.in0).rows(), val(n.in0).cols(),
                        g[0] / static_cast<double>(val(n.in0).size())));
                break;
            case Op::RowL2Norm: {
                const Mat& x = val(n.in0);
                Mat gx(x.rows(), x.cols());
                for (int r = 0; r < x.rows(); ++r) {
                    double norm = n.value(r, 0);
                    if (norm == 0.0) continue;  // subgradient 0 at the origin
                    double scale = g(r, 0) / norm;
                    for (int c = 0; c < x.cols(); ++c) gx(r, c) = scale * x(r, c);
                }
                acc(n.in0, std::move(gx));
                break;
            }
            case Op::ConcatRows: {
                const Mat& a = val(n.in0);
                const Mat& b = val(n.in1);
                Mat ga(a.rows(), a.cols());
                Mat gb(b.rows(), b.cols());
                for (int r = 0; r < a.rows(); ++r)
                    for (int c = 0; c < a.cols(); ++c) ga(r, c) = g(r, c);
                for (int r = 0; r < b.rows(); ++r)
                    for (int c = 0; c < b.cols(); ++c) gb(r, c) = g(a.rows() + r, c);
                acc(n.in0, std::move(ga));
                acc(n.in1, std::move(gb));
                break;
            }
            case Op::Transpose:
                acc(n.in0, evoga::transpose(g));
                break;
            case Op::SumRows: {
                const Mat& x = val(n.in0);
                Mat gx(x.rows(), x.cols());
                for (int r = 0; r < x.rows(); ++r)
                    for (int c = 0; c < x.cols(); ++c) gx(r, c) = g(0, c);
                acc(n.in0, std::move(gx));
                break;
            }
            case Op::SumCols: {
                const Mat& x = val(n.in0);
                Mat gx(x.rows(), x.cols());
                for (int r = 0; r < x.rows(); ++r)
                    for (int c = 0; c < x.cols(); ++c) gx(r, c) = g(r, 0);
                acc(n.in0, std::move(gx));
                break;
            }
            case Op::BroadcastRows: {
                Mat gx(1, g.cols());
                for (int r = 0; r < g.rows(); ++r)
                    for (int c = 0; c < g.cols(); ++c) gx(0, c) += g(r, c);
                acc(n.in0, std::move(gx));
                break;
            }
            case Op::BroadcastCols: {
                Mat gx(g.rows(), 1);
                for (int r = 0; r < g.rows(); ++r)
                    for (int c = 0; c < g.cols(); ++c) gx(r, 0) += g(r, c);
                acc(n.in0, std::move(gx));
                break;
            }
            case Op::BroadcastScalar: {
                double s = 0;
                for (size_t i = 0; i < g.size(); ++i) s += g[i];
                acc(n.in0, Mat::scalar(s));
                break;
            }
            case Op::Heaviside:
            case Op::Sign:
                break;  // derivative zero everywhere
            case Op::SliceRows: {
                const Mat& x = val(n.in0);
                Mat gx(x.rows(), x.cols());
                for (int r = 0; r < n.aux1; ++r)
                    for (int c = 0; c < x.cols(); ++c) gx(n.aux0 + r, c) = g(r, c);
                acc(n.in0, std::move(gx));
                break;
            }
            case Op::PadRows: {
                const Mat& x = val(n.in0);
                Mat gx(x.rows(), x.cols());
                for (int r = 0; r < x.rows(); ++r)
                    for (int c = 0; c < x.cols(); ++c) gx(r, c) = g(n.aux0 + r, c);
                acc(n.in0, std::move(gx));
                break;
            }
        }
    }

    void acc_graph_at(std::vector<NodeId>& adj, NodeId id, NodeId g) {
        adj[id] = adj[id] < 0 ? g : add(adj[id], g);
    }

    // The graph adjoints mirror accumulate_numeric but are built from the
    // primitive op set, so each emitted node is itself differentiable.
    void emit_graph_adjoints(NodeId id, std::vector<NodeId>& adj, const std::vector<char>& needs) {
        Node n = nodes_[id];  // copy: push() may reallocate nodes_
        NodeId g = adj[id];
        auto acc_graph = [this, &adj, &needs](NodeId to, NodeId gg) {
            if (wants(needs, to)) acc_graph_at(adj, to, gg);
        };
        switch (n.op) {
            case Op::Constant:
            case Op::Parameter:
                break;
            case Op::Matmul:
                // guarded individually: each side is a full GEMM
                if (wants(needs, n.in0)) acc_graph(n.in0, matmul(g, transpose(n.in1)));
                if (wants(needs, n.in1)) acc_graph(n.in1, matmul(transpose(n.in0), g));
                break;
            case Op::Add:
                acc_graph(n.in0, g);
                acc_graph(n.in1, g);
                break;
            case Op::AddBias:
                acc_graph(n.in0, g);
                acc_graph(n.in1, sum_rows(g));
                break;
            case Op::Sub:
                acc_graph(n.in0, g);
                acc_graph(n.in1, scalar_mul(g, -1.0));
                break;
            case Op::Mul:
                acc_graph(n.in0, mul(g, n.in1));
                acc_graph(n.in1, mul(g, n.in0));
                break;
            case Op::Div:
                acc_graph(n.in0, div(g, n.in1));
                acc_graph(n.in1,
                          scalar_mul(div(mul(g, n.in0), mul(n.in1, n.in1)), -1.0));
                break;
            case Op::ScalarMul:
                acc_graph(n.in0, scalar_mul(g, n.payload));
                break;
            case Op::Relu:
                // relu'' is taken as zero everywhere, including the kink.
                acc_graph(n.in0, mul(g, heaviside(n.in0, 0.0)));
                break;
            case Op::Sigmoid:
                acc_graph(n.in0, mul(g, sub(id, square(id))));
                break;
            case Op::Tanh:
                acc_graph(n.in0, sub(g, mul(g, square(id))));
                break;
            case Op::Log:
                acc_graph(n.in0, div(g, n.in0));
                break;
            case Op::ClampMin:
                acc_graph(n.in0, mul(g, heaviside(n.in0, n.payload)));
                break;
            case Op::Square:
                acc_graph(n.in0, scalar_mul(mul(g, n.in0), 2.0));
                break;
            case Op::Abs:
                acc_graph(n.in0, mul(g, sign(n.in0)));
                break;
            case Op::Sum:
                acc_graph(n.in0,
                          broadcast_scalar(g, val(n.in0).rows(), val(n.in0).cols()));
                break;
            case Op::Mean: {
                const Mat& x = val(n.in0);
                acc_graph(n.in0,
                          scalar_mul(broadcast_scalar(g, x.rows(), x.cols()),
                                     1.0 / static_cast<double>(x.size())));
                break;
            }
            case Op::RowL2Norm: {
                // dx = x .* broadcast(g / max(norm, eps)); the clamp keeps the
                // adjoint graph finite at an exactly-zero row.
                NodeId safe = clamp_min(id, 1e-300);
                NodeId scale = broadcast_cols(div(g, safe), val(n.in0).cols());
                acc_graph(n.in0, mul(n.in0, scale));
                break;
            }
            case Op::ConcatRows: {
                int ra = val(n.in0).rows();
                int rb = val(n.in1).rows();
                acc_graph(n.in0, slice_rows(g, 0, ra));
                acc_graph(n.in1, slice_rows(g, ra, rb));
                break;
            }
            case Op::Transpose:
                acc_graph(n.in0, transpose(g));
                break;
            case Op::SumRows:
                acc_graph(n.in0, broadcast_rows(g, val(n.in0).rows()));
                break;
            case Op::SumCols:
                acc_graph(n.in0, broadcast_cols(g, val(n.in0).cols()));
                break;
            case Op::BroadcastRows:
                acc_graph(n.in0, sum_rows(g));
                break;
            case Op::BroadcastCols:
                acc_graph(n.in0, sum_cols(g));
                break;
            case Op::BroadcastScalar:
                acc_graph(n.in0, sum(g));
                break;
            case Op::Heaviside:
            case Op::Sign:
                break;
            case Op::SliceRows:
                acc_graph(n.in0, pad_rows(g, n.aux0, val(n.in0).rows()));
                break;
            case Op::PadRows:
                acc_graph(n.in0, slice_rows(g, n.aux0, val(n.in0).rows()));
                break;
        }
    }
};

}  // namespace evoga

#endif
