#include "carnot/simd/batch_support.hpp"

#include "carnot/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <type_traits>

namespace carnot::simd {

namespace {

bool cpu_has_avx2() {
#if defined(CARNOT_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa resolve_isa() {
  const char* forced = std::getenv("CARNOT_SIMD");
  if (forced && std::string(forced) == "scalar") return Isa::kScalar;
  return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return cpu_has_avx2();
  }
  return false;
}

Isa active_isa() {
  static const Isa isa = resolve_isa();
  return isa;
}

void quadratic_support(Isa isa, const QuadraticKernelArgs& args, const double* h,
                       std::size_t count, double* values, double* grad) {
  if (args.dim < 1 || args.dim > kMaxKernelDim) {
    throw InputError("quadratic_support: kernel dimension out of range");
  }
#if defined(CARNOT_HAVE_AVX2)
  if (isa == Isa::kAvx2 && isa_available(Isa::kAvx2)) {
    avx2::quadratic_support(args, h, count, values, grad);
    return;
  }
#endif
  scalar::quadratic_support(args, h, count, values, grad);
}

void support_batch(const ControlBody& body, const Mat& points, Vec& values, Mat* gradients,
                   Isa isa) {
  const int k = body.dim();
  if (points.cols() != k) {
    throw InputError("support_batch: point dimension does not match body");
  }
  const auto count = static_cast<std::size_t>(points.rows());
  values.resize(points.rows());
  if (gradients) gradients->resize(points.rows(), k);

  // Row-major k×k copy for the kernel.
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  auto per_point = [&] {
    for (Eigen::Index p = 0; p < points.rows(); ++p) {
      const Vec h = points.row(p).transpose();
      values[p] = support(body, h);
      if (!gradients) continue;
      if (h.norm() < kZeroGuard) {
        gradients->row(p).setConstant(std::numeric_limits<double>::quiet_NaN());
      } else {
        gradients->row(p) = support_gradient(body, h).transpose();
      }
    }
  };
  auto run_quadratic = [&](const Mat& shape, const Vec* center) {
    if (k > kMaxKernelDim) {
      per_point();
      return;
    }
    const RowMajor rows = shape;
    QuadraticKernelArgs args{rows.data(), center ? center->data() : nullptr, k};
    quadratic_support(isa, args, points.data(), count, values.data(),
                      gradients ? gradients->data() : nullptr);
  };

  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, Ellipsoid>) {
          run_quadratic(b.shape, nullptr);
        } else if constexpr (std::is_same_v<T, TranslatedEllipsoid>) {
          run_quadratic(b.shape, &b.center);
        } else {
          per_point();
        }
      },
      body.variant());
}

Mat finite_difference_gradients(const ControlBody& body, const Mat& points, double rel_step,
                                Isa isa) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = points.cols();
  // Row (2·i)·n + p holds point p shifted by +step along i; the next block −step.
  Mat probes(2 * k * n, k);
  Mat steps(n, k);
  for (Eigen::Index p = 0; p < n; ++p) {
    const Vec h = points.row(p).transpose();
    for (Eigen::Index i = 0; i < k; ++i) {
      const double step = fd_component_step(body, h, i, rel_step);
      steps(p, i) = step;
      probes.row((2 * i) * n + p) = points.row(p);
      probes.row((2 * i + 1) * n + p) = points.row(p);
      probes((2 * i) * n + p, i) += step;
      probes((2 * i + 1) * n + p, i) -= step;
    }
  }
  Vec values;
  support_batch(body, probes, values, nullptr, isa);
  Mat grads(n, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index p = 0; p < n; ++p) {
      grads(p, i) = (values[(2 * i) * n + p] - values[(2 * i + 1) * n + p]) / (2.0 * steps(p, i));
    }
  }
  return grads;
}

}  // namespace carnot::simd
