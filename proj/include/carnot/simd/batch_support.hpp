#pragma once

// Batched support-function kernels. Covectors are stored structure-of-arrays:
// component i of point p lives at h[i * count + p], so the vector lanes run
// across points while the (small) dimension k is unrolled in registers.
//
// Every ISA variant computes the same quantities as the scalar reference; the
// only admissible differences come from fused multiply-add rounding.

#include "carnot/convex_bodies.hpp"

#include <cstddef>
#include <string_view>

namespace carnot::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// Whether the variant was compiled in and the running CPU supports it.
bool isa_available(Isa isa);

// Best available ISA, resolved once. CARNOT_SIMD=scalar|avx2 overrides the
// choice (an unavailable request falls back to scalar).
Isa active_isa();

// Quadratic family H(h) = ⟨c, h⟩ + √(hᵀAh); c may be null (centered ellipsoid).
struct QuadraticKernelArgs {
  const double* shape = nullptr;  // k×k, row-major
  const double* center = nullptr;
  int dim = 0;
};

inline constexpr int kMaxKernelDim = 16;

// values[p] = H(h_p); grad (optional, SoA like h) receives ∇H(h_p). A zero
// covector yields value ⟨c,0⟩ = 0 and a NaN gradient.
namespace scalar {
void quadratic_support(const QuadraticKernelArgs& args, const double* h, std::size_t count,
                       double* values, double* grad);
}
namespace avx2 {
void quadratic_support(const QuadraticKernelArgs& args, const double* h, std::size_t count,
                       double* values, double* grad);
}

void quadratic_support(Isa isa, const QuadraticKernelArgs& args, const double* h,
                       std::size_t count, double* values, double* grad);

// Evaluates H and ∇H for each row of `points` (count × k). Quadratic bodies go
// through the active SIMD kernel; lp balls use the scalar per-point path.
// Rows equal to zero produce NaN gradients instead of throwing.
void support_batch(const ControlBody& body, const Mat& points, Vec& values,
                   Mat* gradients = nullptr, Isa isa = active_isa());

// Central-difference gradients (same step rule as finite_difference_gradient)
// for each row of `points`; all 2k perturbed evaluations go through one
// support_batch call.
Mat finite_difference_gradients(const ControlBody& body, const Mat& points,
                                double rel_step = 1e-5, Isa isa = active_isa());

}  // namespace carnot::simd
