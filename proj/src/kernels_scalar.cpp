#include <cstring>

#include "igc/kernels.hpp"

// Reference kernels: plain loops, no fusing tricks. These define the
// semantics the SIMD variants are equivalence-tested against.

namespace igc::kernels {
namespace {

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a,
          const double* b, double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) std::memset(crow, 0, n * sizeof(double));
    const double* arow = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = arow[l];
      const double* brow = b + l * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void relu(std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* x, const double* upstream,
                   double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? upstream[i] : 0.0;
}

void sum_sumsq(std::size_t n, const double* x, double* sum, double* sumsq) {
  double s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += x[i];
    ss += x[i] * x[i];
  }
  *sum = s;
  *sumsq = ss;
}

void scale_shift(std::size_t n, const double* x, double a, double b,
                 double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b;
}

void add(std::size_t n, const double* x, const double* y, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void sgd_update(std::size_t n, double* param, const double* grad,
                double* velocity, double lr, double momentum,
                double weight_decay) {
  for (std::size_t i = 0; i < n; ++i) {
    velocity[i] = momentum * velocity[i] + grad[i] + weight_decay * param[i];
    param[i] -= lr * velocity[i];
  }
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend backend{"scalar",   gemm,        relu,
                               relu_backward, sum_sumsq, scale_shift,
                               add,        sgd_update};
  return backend;
}

}  // namespace igc::kernels
