#include "kpe/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <omp.h>

namespace kpe::kernels {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::int64_t kParallelWork = 1 << 15;

constexpr double kGeluC = 0.044715;
constexpr double kSqrt2OverPi = 0.7978845608028654;

void check_inner(const Matrix& a, std::size_t a_dim, const Matrix& b, std::size_t b_dim,
                 const char* op) {
    if (a_dim != b_dim) {
        throw std::invalid_argument(std::string(op) + ": inner dimension mismatch (" +
                                    a.shape_string() + " vs " + b.shape_string() + ")");
    }
}

std::int64_t work(std::size_t m, std::size_t n, std::size_t k) {
    return static_cast<std::int64_t>(m) * static_cast<std::int64_t>(n) *
           static_cast<std::int64_t>(k);
}

double gelu_scalar(double x) {
    const double inner = kSqrt2OverPi * (x + kGeluC * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(inner));
}

void softmax_row(std::span<const double> in, std::span<double> out) {
    double mx = in[0];
    for (double v : in) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
        out[j] = std::exp(in[j] - mx);
        sum += out[j];
    }
    for (double& v : out) v /= sum;
}

void layer_norm_row(std::span<const double> in, std::span<const double> gain,
                    std::span<const double> bias, double eps, std::span<double> normalized,
                    std::span<double> out, double& inv_std) {
    const double d = static_cast<double>(in.size());
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= d;
    inv_std = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < in.size(); ++j) {
        normalized[j] = (in[j] - mean) * inv_std;
        out[j] = normalized[j] * gain[j] + bias[j];
    }
}

void check_norm_params(const Matrix& x, std::span<const double> gain, std::span<const double> bias) {
    if (gain.size() != x.cols() || bias.size() != x.cols()) {
        throw std::invalid_argument("layer_norm_rows: gain/bias width mismatch");
    }
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

double gelu_derivative(double x) {
    const double inner = kSqrt2OverPi * (x + kGeluC * x * x * x);
    const double t = std::tanh(inner);
    const double dinner = kSqrt2OverPi * (1.0 + 3.0 * kGeluC * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_inner(a, a.cols(), b, b.rows(), "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Matrix c(m, n);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = c.data().data();
#pragma omp parallel for schedule(static) if (work(m, n, k) > kParallelWork)
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = pc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check_inner(a, a.cols(), b, b.cols(), "matmul_nt");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Matrix c(m, n);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = c.data().data();
#pragma omp parallel for schedule(static) if (work(m, n, k) > kParallelWork)
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = pb + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            pc[i * n + j] = acc;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check_inner(a, a.rows(), b, b.rows(), "matmul_tn");
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    Matrix c(m, n);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = c.data().data();
#pragma omp parallel for schedule(static) if (work(m, n, k) > kParallelWork)
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = pc + i * n;
        for (std::size_t r = 0; r < k; ++r) {
            const double av = pa[r * m + i];
            const double* brow = pb + r * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix softmax_rows(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    if (x.cols() == 0) return out;
#pragma omp parallel for schedule(static) if (work(x.rows(), x.cols(), 8) > kParallelWork)
    for (std::size_t i = 0; i < x.rows(); ++i) softmax_row(x.row(i), out.row(i));
    return out;
}

Matrix layer_norm_rows(const Matrix& x, std::span<const double> gain, std::span<const double> bias,
                       double eps, Matrix& normalized, std::vector<double>& inv_std) {
    check_norm_params(x, gain, bias);
    Matrix out(x.rows(), x.cols());
    normalized = Matrix(x.rows(), x.cols());
    inv_std.assign(x.rows(), 0.0);
#pragma omp parallel for schedule(static) if (work(x.rows(), x.cols(), 8) > kParallelWork)
    for (std::size_t i = 0; i < x.rows(); ++i) {
        layer_norm_row(x.row(i), gain, bias, eps, normalized.row(i), out.row(i), inv_std[i]);
    }
    return out;
}

Matrix gelu(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    const auto& in = x.data();
    auto& o = out.data();
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(in.size()) * 16 > kParallelWork)
    for (std::size_t i = 0; i < in.size(); ++i) o[i] = gelu_scalar(in[i]);
    return out;
}

namespace reference {

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_inner(a, a.cols(), b, b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < a.cols(); ++p) acc += a(i, p) * b(p, j);
            c(i, j) = acc;
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check_inner(a, a.cols(), b, b.cols(), "matmul_nt");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < a.cols(); ++p) acc += a(i, p) * b(j, p);
            c(i, j) = acc;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check_inner(a, a.rows(), b, b.rows(), "matmul_tn");
    Matrix c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < a.rows(); ++r) acc += a(r, i) * b(r, j);
            c(i, j) = acc;
        }
    }
    return c;
}

Matrix softmax_rows(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    if (x.cols() == 0) return out;
    for (std::size_t i = 0; i < x.rows(); ++i) softmax_row(x.row(i), out.row(i));
    return out;
}

Matrix layer_norm_rows(const Matrix& x, std::span<const double> gain, std::span<const double> bias,
                       double eps, Matrix& normalized, std::vector<double>& inv_std) {
    check_norm_params(x, gain, bias);
    Matrix out(x.rows(), x.cols());
    normalized = Matrix(x.rows(), x.cols());
    inv_std.assign(x.rows(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        layer_norm_row(x.row(i), gain, bias, eps, normalized.row(i), out.row(i), inv_std[i]);
    }
    return out;
}

Matrix gelu(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = gelu_scalar(x.data()[i]);
    return out;
}

}  // namespace reference

}  // namespace kpe::kernels
