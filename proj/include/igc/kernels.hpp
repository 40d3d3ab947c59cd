#pragma once

#include <cstddef>

namespace igc::kernels {

// C (m x n, row-major) = A (m x k) * B (k x n); accumulates into C when asked.
// Per-element contract: C[i][j] is the ascending-k sum of A[i][k]*B[k][j];
// vector backends use fused multiply-add for every element, tails included.
using GemmFn = void (*)(std::size_t m, std::size_t n, std::size_t k,
                        const double* a, const double* b, double* c,
                        bool accumulate);
using MapFn = void (*)(std::size_t n, const double* x, double* y);
// y[i] = upstream[i] where x[i] > 0, else 0.
using Map2Fn = void (*)(std::size_t n, const double* x, const double* upstream,
                        double* y);
using ReduceFn = void (*)(std::size_t n, const double* x, double* sum,
                          double* sumsq);
// y[i] = a*x[i] + b
using ScaleShiftFn = void (*)(std::size_t n, const double* x, double a,
                              double b, double* y);
using AddFn = void (*)(std::size_t n, const double* x, const double* y,
                       double* out);
// v = momentum*v + grad + weight_decay*param; param -= lr*v  (in place)
using SgdFn = void (*)(std::size_t n, double* param, const double* grad,
                       double* velocity, double lr, double momentum,
                       double weight_decay);

struct Backend {
  const char* name;
  GemmFn gemm;
  MapFn relu;
  Map2Fn relu_backward;
  ReduceFn sum_sumsq;
  ScaleShiftFn scale_shift;
  AddFn add;
  SgdFn sgd_update;
};

enum class Dispatch { Auto, Scalar, Avx2 };

// Backend used by all higher-level code. Auto picks AVX2 when the CPU has
// AVX2+FMA, scalar otherwise; the choice is stable for the process lifetime
// unless force() overrides it.
const Backend& active();

// Test hook: pin the backend (throws igc::ConfigError if unavailable).
void force(Dispatch d);

bool avx2_available();
const Backend& scalar_backend();
const Backend& avx2_backend();  // valid only when avx2_available()

}  // namespace igc::kernels
