// Compiled with -mavx2 -mfma; only called after a runtime CPU check.
#include "carnot/simd/batch_support.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace carnot::simd::avx2 {

namespace {

// Handles the tail points [first, count) with the same arithmetic order as the
// vector loop, but one lane at a time.
void tail(const QuadraticKernelArgs& args, const double* h, std::size_t count,
          std::size_t first, double* values, double* grad) {
  const int k = args.dim;
  double ah[kMaxKernelDim];
  for (std::size_t p = first; p < count; ++p) {
    double quad = 0.0;
    double lin = 0.0;
    for (int i = 0; i < k; ++i) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc = std::fma(args.shape[i * k + j], h[j * count + p], acc);
      ah[i] = acc;
      quad = std::fma(h[i * count + p], acc, quad);
      if (args.center) lin = std::fma(args.center[i], h[i * count + p], lin);
    }
    const double root = std::sqrt(std::max(quad, 0.0));
    values[p] = root + lin;
    if (grad) {
      for (int i = 0; i < k; ++i) {
        const double c = args.center ? args.center[i] : 0.0;
        grad[i * count + p] = c + ah[i] / root;
      }
    }
  }
}

}  // namespace

void quadratic_support(const QuadraticKernelArgs& args, const double* h, std::size_t count,
                       double* values, double* grad) {
  const int k = args.dim;
  const __m256d zero = _mm256_setzero_pd();
  __m256d hv[kMaxKernelDim];
  __m256d ah[kMaxKernelDim];

  std::size_t p = 0;
  for (; p + 4 <= count; p += 4) {
    for (int i = 0; i < k; ++i) hv[i] = _mm256_loadu_pd(h + i * count + p);

    __m256d quad = zero;
    __m256d lin = zero;
    for (int i = 0; i < k; ++i) {
      __m256d acc = zero;
      const double* row = args.shape + i * k;
      for (int j = 0; j < k; ++j) acc = _mm256_fmadd_pd(_mm256_set1_pd(row[j]), hv[j], acc);
      ah[i] = acc;
      quad = _mm256_fmadd_pd(hv[i], acc, quad);
      if (args.center) lin = _mm256_fmadd_pd(_mm256_set1_pd(args.center[i]), hv[i], lin);
    }
    const __m256d root = _mm256_sqrt_pd(_mm256_max_pd(quad, zero));
    _mm256_storeu_pd(values + p, _mm256_add_pd(root, lin));

    if (grad) {
      for (int i = 0; i < k; ++i) {
        const __m256d c = _mm256_set1_pd(args.center ? args.center[i] : 0.0);
        _mm256_storeu_pd(grad + i * count + p, _mm256_add_pd(c, _mm256_div_pd(ah[i], root)));
      }
    }
  }
  tail(args, h, count, p, values, grad);
}

}  // namespace carnot::simd::avx2
