#pragma once

// Dense numeric kernels used by the encoder and its backward pass.
//
// Every kernel exists twice: an OpenMP version in kpe::kernels that the
// library calls, and a plain serial version in kpe::kernels::reference
// kept for tests and benchmarks. Both partition work by output row and
// accumulate each output element in the same order, so their results are
// bitwise identical.

#include "kpe/tensor.hpp"

#include <span>

namespace kpe::kernels {

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& x);

// Row-wise layer normalization. Writes the normalized (pre-affine) rows to
// `normalized` and 1/sqrt(var + eps) per row to `inv_std`.
Matrix layer_norm_rows(const Matrix& x, std::span<const double> gain, std::span<const double> bias,
                       double eps, Matrix& normalized, std::vector<double>& inv_std);

// tanh-approximated GELU, elementwise.
Matrix gelu(const Matrix& x);
double gelu_derivative(double x);

// Number of threads the parallel kernels may use.
int max_threads();

namespace reference {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix softmax_rows(const Matrix& x);
Matrix layer_norm_rows(const Matrix& x, std::span<const double> gain, std::span<const double> bias,
                       double eps, Matrix& normalized, std::vector<double>& inv_std);
Matrix gelu(const Matrix& x);

}  // namespace reference

}  // namespace kpe::kernels
