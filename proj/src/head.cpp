#include "kpe/head.hpp"

#include "init.hpp"
#include "kpe/kernels.hpp"

namespace kpe {

TwoLayerHead::TwoLayerHead(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                           std::mt19937_64& rng)
    : w1(detail::dense_weight(input_dim, hidden_dim, rng)),
      b1(detail::zeros(1, hidden_dim)),
      w2(detail::dense_weight(hidden_dim, output_dim, rng)),
      b2(detail::zeros(1, output_dim)) {}

ag::Var TwoLayerHead::logits(ag::Graph& g, ag::Var x) const {
    if (x.cols() != input_dim()) {
        throw std::invalid_argument("head: input width " + std::to_string(x.cols()) + " does not match " +
                                    std::to_string(input_dim()));
    }
    ag::Var hidden = ag::add_row(ag::matmul(x, g.parameter(w1)), g.parameter(b1));
    return ag::add_row(ag::matmul(hidden, g.parameter(w2)), g.parameter(b2));
}

Matrix TwoLayerHead::logits(const Matrix& x) const {
    if (x.cols() != input_dim()) {
        throw std::invalid_argument("head: input width " + std::to_string(x.cols()) + " does not match " +
                                    std::to_string(input_dim()));
    }
    Matrix hidden = kernels::matmul(x, w1.value);
    for (std::size_t i = 0; i < hidden.rows(); ++i)
        for (std::size_t j = 0; j < hidden.cols(); ++j) hidden(i, j) += b1.value(0, j);
    Matrix out = kernels::matmul(hidden, w2.value);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += b2.value(0, j);
    return out;
}

void TwoLayerHead::zero() {
    for (Parameter* p : {&w1, &b1, &w2, &b2}) p->value.fill(0.0);
}

void TwoLayerHead::visit_parameters(const std::string& prefix, const ParameterVisitor& f) {
    f(prefix + "w1", w1);
    f(prefix + "b1", b1);
    f(prefix + "w2", w2);
    f(prefix + "b2", b2);
}

void TwoLayerHead::visit_parameters(const std::string& prefix, const ConstParameterVisitor& f) const {
    f(prefix + "w1", w1);
    f(prefix + "b1", b1);
    f(prefix + "w2", w2);
    f(prefix + "b2", b2);
}

}  // namespace kpe
