#include "igc/kernels.hpp"

// AVX2+FMA variants. Compiled with -mavx2 -mfma on x86-64; the dispatcher
// only hands these out after a runtime CPU check.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstring>

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
      const __m256d avv = _mm256_set1_pd(av);
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d cv = _mm256_loadu_pd(crow + j);
        cv = _mm256_fmadd_pd(avv, _mm256_loadu_pd(brow + j), cv);
        _mm256_storeu_pd(crow + j, cv);
      }
      // fma in the tail keeps every element on the fused path
      for (; j < n; ++j) crow[j] = std::fma(av, brow[j], crow[j]);
    }
  }
}

void relu(std::size_t n, const double* x, double* y) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* x, const double* upstream,
                   double* y) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(y + i, _mm256_and_pd(mask, _mm256_loadu_pd(upstream + i)));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? upstream[i] : 0.0;
}

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void sum_sumsq(std::size_t n, const double* x, double* sum, double* sumsq) {
  __m256d s = _mm256_setzero_pd();
  __m256d ss = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    s = _mm256_add_pd(s, v);
    ss = _mm256_fmadd_pd(v, v, ss);
  }
  double st = hsum(s), sst = hsum(ss);
  for (; i < n; ++i) {
    st += x[i];
    sst += x[i] * x[i];
  }
  *sum = st;
  *sumsq = sst;
}

void scale_shift(std::size_t n, const double* x, double a, double b,
                 double* y) {
  const __m256d av = _mm256_set1_pd(a);
  const __m256d bv = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), bv));
  for (; i < n; ++i) y[i] = std::fma(a, x[i], b);
}

void add(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void sgd_update(std::size_t n, double* param, const double* grad,
                double* velocity, double lr, double momentum,
                double weight_decay) {
  const __m256d mu = _mm256_set1_pd(momentum);
  const __m256d wd = _mm256_set1_pd(weight_decay);
  const __m256d nlr = _mm256_set1_pd(-lr);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_loadu_pd(param + i);
    const __m256d g = _mm256_loadu_pd(grad + i);
    __m256d v = _mm256_loadu_pd(velocity + i);
    v = _mm256_fmadd_pd(mu, v, _mm256_fmadd_pd(wd, p, g));
    _mm256_storeu_pd(velocity + i, v);
    _mm256_storeu_pd(param + i, _mm256_fmadd_pd(nlr, v, p));
  }
  for (; i < n; ++i) {
    velocity[i] =
        std::fma(momentum, velocity[i], std::fma(weight_decay, param[i], grad[i]));
    param[i] = std::fma(-lr, velocity[i], param[i]);
  }
}

}  // namespace

const Backend* avx2_backend_ptr() {
  static const Backend backend{"avx2",       gemm,        relu,
                               relu_backward, sum_sumsq,  scale_shift,
                               add,          sgd_update};
  return &backend;
}

}  // namespace igc::kernels

#else

namespace igc::kernels {
const Backend* avx2_backend_ptr() { return nullptr; }
}  // namespace igc::kernels

#endif
