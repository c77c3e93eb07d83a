#pragma once

// Tape-based reverse-mode differentiation over dense matrices.
//
// A Graph records every operation applied to its Vars. Parameters enter the
// graph by reference (no copy); after backward() their gradients can be read
// with Graph::gradient(). Graphs are single-use and single-threaded, but
// separate graphs may read the same parameters concurrently.

#include "kpe/tensor.hpp"

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

namespace kpe::ag {

class Graph;

struct Var {
    Graph* graph = nullptr;
    std::size_t id = 0;

    const Matrix& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    double scalar() const;
};

class Graph {
public:
    using Backward = std::function<void(Graph&, std::size_t self)>;

    Var constant(Matrix m);
    Var parameter(const Parameter& p);

    const Matrix& value(std::size_t id) const;
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    // Gradient buffer of a node, allocated (zeroed) on first access.
    Matrix& grad(std::size_t id);

    // Seeds d(root)/d(root) = 1 for a 1×1 root and propagates to every node.
    void backward(Var root);

    // Gradient w.r.t. a parameter used in this graph; nullptr when unused.
    const Matrix* gradient(const Parameter& p) const;

    Var record(Matrix value, bool requires_grad, Backward backward);
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        const Matrix* external = nullptr;
        Matrix grad;
        bool requires_grad = false;
        Backward backward;
    };

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> parameter_nodes_;
};

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
// Adds a 1×c row to every row of a.
Var add_row(Var a, Var row);
Var scale(Var a, double s);
Var gelu(Var a);
Var sigmoid(Var a);
Var softmax_rows(Var a);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var gather_rows(Var table, std::span<const std::size_t> ids);
Var select_rows(Var a, std::span<const std::size_t> rows);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var concat_cols(std::span<const Var> parts);
// Column-wise maximum over rows: n×c -> 1×c.
Var max_pool_rows(Var a);
Var sum(Var a);

// -sum_i log(max(probs[i][labels[i]], eps)) as a 1×1 node.
Var label_nll(Var probs, std::span<const int> labels, double eps);
// -sum_i [l_i log(max(q_i, eps)) + (1 - l_i) log(max(1 - q_i, eps))] for an n×1 q.
Var binary_nll(Var q, std::span<const int> labels, double eps);

}  // namespace kpe::ag
