#include "kpe/autograd.hpp"

#include "kpe/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace kpe::ag {

const Matrix& Var::value() const { return graph->value(id); }

double Var::scalar() const {
    const Matrix& v = value();
    if (v.rows() != 1 || v.cols() != 1) {
        throw std::logic_error("Var::scalar on non-scalar node " + v.shape_string());
    }
    return v(0, 0);
}

Var Graph::constant(Matrix m) {
    nodes_.push_back(Node{std::move(m), nullptr, {}, false, {}});
    return Var{this, nodes_.size() - 1};
}

Var Graph::parameter(const Parameter& p) {
    if (auto it = parameter_nodes_.find(&p); it != parameter_nodes_.end()) {
        return Var{this, it->second};
    }
    nodes_.push_back(Node{{}, &p.value, {}, true, {}});
    parameter_nodes_.emplace(&p, nodes_.size() - 1);
    return Var{this, nodes_.size() - 1};
}

const Matrix& Graph::value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external != nullptr ? *n.external : n.value;
}

Matrix& Graph::grad(std::size_t id) {
    Node& n = nodes_[id];
    const Matrix& v = n.external != nullptr ? *n.external : n.value;
    if (!n.grad.same_shape(v)) n.grad = Matrix(v.rows(), v.cols());
    return n.grad;
}

Var Graph::record(Matrix value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), nullptr, {}, requires_grad,
                          requires_grad ? std::move(backward) : Backward{}});
    return Var{this, nodes_.size() - 1};
}

void Graph::backward(Var root) {
    if (root.graph != this) throw std::logic_error("backward: root belongs to another graph");
    const Matrix& rv = value(root.id);
    if (rv.rows() != 1 || rv.cols() != 1) throw std::logic_error("backward: root must be 1x1");
    if (!nodes_[root.id].requires_grad) return;
    grad(root.id)(0, 0) += 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
        n.backward(*this, i);
    }
}

const Matrix* Graph::gradient(const Parameter& p) const {
    auto it = parameter_nodes_.find(&p);
    if (it == parameter_nodes_.end()) return nullptr;
    const Node& n = nodes_[it->second];
    return n.grad.empty() ? nullptr : &n.grad;
}

namespace {

Graph& same_graph(Var a, Var b) {
    if (a.graph == nullptr || a.graph != b.graph) {
        throw std::logic_error("autograd: operands belong to different graphs");
    }
    return *a.graph;
}

bool any_grad(Graph& g, std::initializer_list<Var> vs) {
    for (Var v : vs) {
        if (g.requires_grad(v.id)) return true;
    }
    return false;
}

}  // namespace

Var matmul(Var a, Var b) {
    Graph& g = same_graph(a, b);
    Matrix out = kernels::matmul(a.value(), b.value());
    return g.record(std::move(out), any_grad(g, {a, b}), [ai = a.id, bi = b.id](Graph& g, std::size_t s) {
        const Matrix& gs = g.grad(s);
        if (g.requires_grad(ai)) g.grad(ai) += kernels::matmul_nt(gs, g.value(bi));
        if (g.requires_grad(bi)) g.grad(bi) += kernels::matmul_tn(g.value(ai), gs);
    });
}

Var matmul_nt(Var a, Var b) {
    Graph& g = same_graph(a, b);
    Matrix out = kernels::matmul_nt(a.value(), b.value());
    return g.record(std::move(out), any_grad(g, {a, b}), [ai = a.id, bi = b.id](Graph& g, std::size_t s) {
        const Matrix& gs = g.grad(s);
        if (g.requires_grad(ai)) g.grad(ai) += kernels::matmul(gs, g.value(bi));
        if (g.requires_grad(bi)) g.grad(bi) += kernels::matmul_tn(gs, g.value(ai));
    });
}

Var add(Var a, Var b) {
    Graph& g = same_graph(a, b);
    a.value().require_same_shape(b.value(), "add");
    Matrix out = a.value();
    out += b.value();
    return g.record(std::move(out), any_grad(g, {a, b}), [ai = a.id, bi = b.id](Graph& g, std::size_t s) {
        if (g.requires_grad(ai)) g.grad(ai) += g.grad(s);
        if (g.requires_grad(bi)) g.grad(bi) += g.grad(s);
    });
}

Var add_row(Var a, Var row) {
    Graph& g = same_graph(a, row);
    const Matrix& av = a.value();
    const Matrix& rv = row.value();
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        throw std::invalid_argument("add_row: expected 1x" + std::to_string(av.cols()) + " row, got " +
                                    rv.shape_string());
    }
    Matrix out = av;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
    }
    return g.record(std::move(out), any_grad(g, {a, row}), [ai = a.id, ri = row.id](Graph& g, std::size_t s) {
        const Matrix& gs = g.grad(s);
        if (g.requires_grad(ai)) g.grad(ai) += gs;
        if (g.requires_grad(ri)) {
            Matrix& gr = g.grad(ri);
            for (std::size_t i = 0; i < gs.rows(); ++i) {
                for (std::size_t j = 0; j < gs.cols(); ++j) gr(0, j) += gs(i, j);
            }
        }
    });
}

Var scale(Var a, double k) {
    Graph& g = *a.graph;
    Matrix out = a.value();
    for (double& v : out.data()) v *= k;
    return g.record(std::move(out), g.requires_grad(a.id), [ai = a.id, k](Graph& g, std::size_t s) {
        const Matrix& gs = g.grad(s);
        Matrix& ga = g.grad(ai);
        for (std::size_t i = 0; i < gs.size(); ++i) ga.data()[i] += k * gs.data()[i];
    });
}

Var gelu(Var a) {
    Graph& g = *a.graph;
    Matrix out = kernels::gelu(a.value());
    return g.record(std::move(out), g.requires_grad(a.id), [ai = a.id](Graph& g, std::size_t s) {
        const Matrix& gs = g.grad(s);
        const Matrix& x = g.value(ai);
        Matrix& ga = g.grad(ai);
        for (std::size_t i = 0; i < gs.size(); ++i) {
            ga.data()[i] += gs.data()[i] * kernels::gelu_derivative(x.data()[i]);
        }
    });
}

Var sigmoid(Var a) {
    Graph& g = *a.graph;
    Matrix out = a.value();
    for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
    return g.record(std::move(out), g.requires_grad(a.id), [ai = a.id](Graph& g, std::size_t s) {
        const Matrix& gs = g.grad(s);
        const Matrix& y = g.value(s);
        Matrix& ga = g.grad(ai);
        for (std::size_t i = 0; i < gs.size(); ++i) {
            const double yv = y.data()[i];
            ga.data()[i] += gs.data()[i] * yv * (1.0 - yv);
        }
    });
}

Var softmax_rows(Var a) {
    Graph& g = *a.graph;
    Matrix out = kernels::softmax_rows(a.value());
    return g.record(std::move(out), g.requires_grad(a.id), [ai = a.id](Graph& g, std::size_t s) {
        const Matrix& gs = g.grad(s);
        const Matrix& p = g.value(s);
        Matrix& ga = g.grad(ai);
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < p.cols(); ++j) dot += gs(i, j) * p(i, j);
            for (std::size_t j = 0; j < p.cols(); ++j) ga(i, j) += p(i, j) * (gs(i, j) - dot);
        }
    });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
    Graph& g = same_graph(x, gain);
    same_graph(x, bias);
    auto normalized = std::make_shared<Matrix>();
    auto inv_std = std::make_shared<std::vector<double>>();
    Matrix out = kernels::layer_norm_rows(x.value(), gain.value().row(0), bias.value().row(0), eps,
                                          *normalized, *inv_std);
    return g.record(std::move(out), any_grad(g, {x, gain, bias}),
                    [xi = x.id, gi = gain.id, bi = bias.id, normalized, inv_std](Graph& g, std::size_t s) {
                        const Matrix& gs = g.grad(s);
                        const Matrix& nrm = *normalized;
                        const Matrix& gain_v = g.value(gi);
                        const std::size_t d = nrm.cols();
                        if (g.requires_grad(gi)) {
                            Matrix& gg = g.grad(gi);
                            for (std::size_t i = 0; i < nrm.rows(); ++i)
                                for (std::size_t j = 0; j < d; ++j) gg(0, j) += gs(i, j) * nrm(i, j);
                        }
                        if (g.requires_grad(bi)) {
                            Matrix& gb = g.grad(bi);
                            for (std::size_t i = 0; i < nrm.rows(); ++i)
                                for (std::size_t j = 0; j < d; ++j) gb(0, j) += gs(i, j);
                        }
                        if (g.requires_grad(xi)) {
                            Matrix& gx = g.grad(xi);
                            std::vector<double> dn(d);
                            for (std::size_t i = 0; i < nrm.rows(); ++i) {
                                double mean_dn = 0.0, mean_dn_n = 0.0;
                                for (std::size_t j = 0; j < d; ++j) {
                                    dn[j] = gs(i, j) * gain_v(0, j);
                                    mean_dn += dn[j];
                                    mean_dn_n += dn[j] * nrm(i, j);
                                }
                                mean_dn /= static_cast<double>(d);
                                mean_dn_n /= static_cast<double>(d);
                                for (std::size_t j = 0; j < d; ++j) {
                                    gx(i, j) += (*inv_std)[i] * (dn[j] - mean_dn - nrm(i, j) * mean_dn_n);
                                }
                            }
                        }
                    });
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
    Graph& g = *table.graph;
    const Matrix& t = table.value();
    Matrix out(ids.size(), t.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= t.rows()) throw std::out_of_range("gather_rows: row id out of range");
        std::copy(t.row(ids[i]).begin(), t.row(ids[i]).end(), out.row(i).begin());
    }
    std::vector<std::size_t> idv(ids.begin(), ids.end());
    return g.record(std::move(out), g.requires_grad(table.id), [ti = table.id, idv](Graph& g, std::size_t s) {
        const Matrix& gs = g.grad(s);
        Matrix& gt = g.grad(ti);
        for (std::size_t i = 0; i < idv.size(); ++i) {
            for (std::size_t j = 0; j < gs.cols(); ++j) gt(idv[i], j) += gs(i, j);
        }
    });
}

Var select_rows(Var a, std::span<const std::size_t> rows) { return gather_rows(a, rows); }

Var slice_cols(Var a, std::size_t start, std::size_t count) {
    Graph& g = *a.graph;
    const Matrix& av = a.value();
    if (start + count > av.cols()) throw std::out_of_range("slice_cols: range exceeds width");
    Matrix out(av.rows(), count);
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < count; ++j) out(i, j) = av(i, start + j);
    return g.record(std::move(out), g.requires_grad(a.id), [ai = a.id, start](Graph& g, std::size_t s) {
        const Matrix& gs = g.grad(s);
        Matrix& ga = g.grad(ai);
        for (std::size_t i = 0; i < gs.rows(); ++i)
            for (std::size_t j = 0; j < gs.cols(); ++j) ga(i, start + j) += gs(i, j);
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    Graph& g = *parts[0].graph;
    const std::size_t rows = parts[0].rows();
    std::size_t cols = 0;
    bool needs_grad = false;
    for (Var p : parts) {
        if (p.graph != &g || p.rows() != rows) throw std::invalid_argument("concat_cols: incompatible inputs");
        cols += p.cols();
        needs_grad = needs_grad || g.requires_grad(p.id);
    }
    Matrix out(rows, cols);
    std::vector<std::size_t> ids;
    std::size_t offset = 0;
    for (Var p : parts) {
        const Matrix& pv = p.value();
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < pv.cols(); ++j) out(i, offset + j) = pv(i, j);
        offset += pv.cols();
        ids.push_back(p.id);
    }
    return g.record(std::move(out), needs_grad, [ids](Graph& g, std::size_t s) {
        const Matrix& gs = g.grad(s);
        std::size_t offset = 0;
        for (std::size_t id : ids) {
            const std::size_t w = g.value(id).cols();
            if (g.requires_grad(id)) {
                Matrix& gp = g.grad(id);
                for (std::size_t i = 0; i < gs.rows(); ++i)
                    for (std::size_t j = 0; j < w; ++j) gp(i, j) += gs(i, offset + j);
            }
            offset += w;
        }
    });
}

Var max_pool_rows(Var a) {
    Graph& g = *a.graph;
    const Matrix& av = a.value();
    if (av.rows() == 0) throw std::invalid_argument("max_pool_rows: no rows");
    Matrix out(1, av.cols());
    std::vector<std::size_t> argmax(av.cols(), 0);
    for (std::size_t j = 0; j < av.cols(); ++j) {
        out(0, j) = av(0, j);
        for (std::size_t i = 1; i < av.rows(); ++i) {
            if (av(i, j) > out(0, j)) {
                out(0, j) = av(i, j);
                argmax[j] = i;
            }
        }
    }
    return g.record(std::move(out), g.requires_grad(a.id), [ai = a.id, argmax](Graph& g, std::size_t s) {
        const Matrix& gs = g.grad(s);
        Matrix& ga = g.grad(ai);
        for (std::size_t j = 0; j < argmax.size(); ++j) ga(argmax[j], j) += gs(0, j);
    });
}

Var sum(Var a) {
    Graph& g = *a.graph;
    double total = 0.0;
    for (double v : a.value().data()) total += v;
    return g.record(Matrix(1, 1, total), g.requires_grad(a.id), [ai = a.id](Graph& g, std::size_t s) {
        const double gs = g.grad(s)(0, 0);
        for (double& v : g.grad(ai).data()) v += gs;
    });
}

Var label_nll(Var probs, std::span<const int> labels, double eps) {
    Graph& g = *probs.graph;
    const Matrix& p = probs.value();
    if (labels.size() != p.rows()) throw std::invalid_argument("label_nll: length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        const auto l = static_cast<std::size_t>(labels[i]);
        if (l >= p.cols()) throw std::out_of_range("label_nll: label out of range");
        total -= std::log(std::max(p(i, l), eps));
    }
    std::vector<int> lv(labels.begin(), labels.end());
    return g.record(Matrix(1, 1, total), g.requires_grad(probs.id),
                    [pi = probs.id, lv, eps](Graph& g, std::size_t s) {
                        const double gs = g.grad(s)(0, 0);
                        const Matrix& p = g.value(pi);
                        Matrix& gp = g.grad(pi);
                        for (std::size_t i = 0; i < lv.size(); ++i) {
                            const auto l = static_cast<std::size_t>(lv[i]);
                            if (p(i, l) > eps) gp(i, l) -= gs / p(i, l);
                        }
                    });
}

Var binary_nll(Var q, std::span<const int> labels, double eps) {
    Graph& g = *q.graph;
    const Matrix& qv = q.value();
    if (qv.cols() != 1 || labels.size() != qv.rows()) {
        throw std::invalid_argument("binary_nll: expected n x 1 input matching labels");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < qv.rows(); ++i) {
        const double p = labels[i] != 0 ? qv(i, 0) : 1.0 - qv(i, 0);
        total -= std::log(std::max(p, eps));
    }
    std::vector<int> lv(labels.begin(), labels.end());
    return g.record(Matrix(1, 1, total), g.requires_grad(q.id), [qi = q.id, lv, eps](Graph& g, std::size_t s) {
        const double gs = g.grad(s)(0, 0);
        const Matrix& qv = g.value(qi);
        Matrix& gq = g.grad(qi);
        for (std::size_t i = 0; i < lv.size(); ++i) {
            if (lv[i] != 0) {
                if (qv(i, 0) > eps) gq(i, 0) -= gs / qv(i, 0);
            } else {
                const double r = 1.0 - qv(i, 0);
                if (r > eps) gq(i, 0) += gs / r;
            }
        }
    });
}

}  // namespace kpe::ag
