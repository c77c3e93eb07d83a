#pragma once

#include "kpe/autograd.hpp"
#include "kpe/tensor.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace kpe {

// logits = (x W1 + b1) W2 + b2, applied row-wise. No activation between the
// two projections.
struct TwoLayerHead {
    Parameter w1, b1, w2, b2;

    TwoLayerHead() = default;
    TwoLayerHead(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim, std::mt19937_64& rng);

    std::size_t input_dim() const { return w1.value.rows(); }
    std::size_t output_dim() const { return w2.value.cols(); }

    ag::Var logits(ag::Graph& g, ag::Var x) const;
    Matrix logits(const Matrix& x) const;

    // Sets every weight and bias to zero.
    void zero();

    void visit_parameters(const std::string& prefix, const ParameterVisitor& f);
    void visit_parameters(const std::string& prefix, const ConstParameterVisitor& f) const;
};

}  // namespace kpe
