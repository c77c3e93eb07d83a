#include "kpe/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace kpe {

OptimizerKind parse_optimizer_kind(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adam") return OptimizerKind::Adam;
    throw std::invalid_argument("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

void Optimizer::step(std::span<Parameter* const> params) {
    ++steps_;
    if (config_.kind == OptimizerKind::Sgd) {
        for (Parameter* p : params) {
            auto& v = p->value.data();
            const auto& g = p->grad.data();
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= config_.learning_rate * g[i];
        }
        return;
    }

    if (first_moment_.empty()) {
        for (Parameter* p : params) {
            first_moment_.emplace_back(p->value.rows(), p->value.cols());
            second_moment_.emplace_back(p->value.rows(), p->value.cols());
        }
    }
    if (first_moment_.size() != params.size()) {
        throw std::logic_error("Optimizer::step: parameter list changed between steps");
    }
    const double t = static_cast<double>(steps_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& v = params[k]->value.data();
        const auto& g = params[k]->grad.data();
        auto& m = first_moment_[k].data();
        auto& s = second_moment_[k].data();
        for (std::size_t i = 0; i < v.size(); ++i) {
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
            s[i] = config_.beta2 * s[i] + (1.0 - config_.beta2) * g[i] * g[i];
            v[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(s[i] / c2) + config_.epsilon);
        }
    }
}

}  // namespace kpe
