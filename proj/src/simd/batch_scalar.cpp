#include "carnot/simd/batch_support.hpp"

#include <algorithm>
#include <cmath>

namespace carnot::simd::scalar {

void quadratic_support(const QuadraticKernelArgs& args, const double* h, std::size_t count,
                       double* values, double* grad) {
  const int k = args.dim;
  double ah[kMaxKernelDim];
  for (std::size_t p = 0; p < count; ++p) {
    double quad = 0.0;
    double lin = 0.0;
    for (int i = 0; i < k; ++i) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += args.shape[i * k + j] * h[j * count + p];
      ah[i] = acc;
      quad += h[i * count + p] * acc;
      if (args.center) lin += args.center[i] * h[i * count + p];
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

}  // namespace carnot::simd::scalar
