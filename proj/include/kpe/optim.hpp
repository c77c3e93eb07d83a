#pragma once

#include "kpe/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace kpe {

enum class OptimizerKind { Sgd, Adam };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Sgd;
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Applies one update from the gradients currently stored in each Parameter.
// The parameter list must be the same (same order) on every call.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config) : config_(config) {}

    void step(std::span<Parameter* const> params);
    long steps_taken() const { return steps_; }

private:
    OptimizerConfig config_;
    long steps_ = 0;
    std::vector<Matrix> first_moment_;
    std::vector<Matrix> second_moment_;
};

}  // namespace kpe
