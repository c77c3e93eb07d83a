#pragma once

#include "kpe/tensor.hpp"

#include <cmath>
#include <random>

namespace kpe::detail {

inline Matrix random_normal(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = dist(rng);
    return m;
}

// Weight matrix for a fan_in -> fan_out projection.
inline Parameter dense_weight(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    return Parameter(random_normal(fan_in, fan_out, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
}

inline Parameter zeros(std::size_t rows, std::size_t cols) { return Parameter(Matrix(rows, cols)); }
inline Parameter ones(std::size_t rows, std::size_t cols) { return Parameter(Matrix(rows, cols, 1.0)); }

}  // namespace kpe::detail
