#pragma once

// Adaptive Dormand–Prince 5(4) stepper with FSAL and Hairer's fourth-order
// continuous extension. Drivers call step() repeatedly and inspect each
// accepted step through its DenseSegment.

#include "carnot/convex_bodies.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace carnot {

using OdeRhs = std::function<void(double t, const Vec& y, Vec& dydt)>;

// Components s_i(y) whose zero sets are surfaces where the right-hand side
// loses smoothness. Accepted steps never straddle such a surface: the step is
// redone to end at the first located crossing.
using SwitchingFn = std::function<Vec(const Vec& y)>;

inline constexpr double kDefaultRtol = 1e-12;
inline constexpr double kDefaultAtol = 1e-14;

struct StepperOptions {
  double rtol = kDefaultRtol;
  double atol = kDefaultAtol;
  double initial_step = 0.0;  // 0: automatic
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-14;
  std::size_t max_steps = 50'000'000;
  SwitchingFn switching;
  // |s_i| at or below band·max(1, ‖s‖∞) counts as lying on the surface.
  double switching_band = 1e-9;
  // Error norm multiplier for steps within one step length of a switching
  // surface.
  double switching_error_scale = 100.0;
};

// Interpolant over one accepted step [t0, t0 + dt].
class DenseSegment {
 public:
  DenseSegment() = default;
  DenseSegment(double t0, double dt, Vec y0, Vec diff, Vec c3, Vec c4, Vec c5)
      : t0_(t0), dt_(dt), y0_(std::move(y0)), diff_(std::move(diff)), c3_(std::move(c3)),
        c4_(std::move(c4)), c5_(std::move(c5)) {}

  double t_begin() const { return t0_; }
  double t_end() const { return t0_ + dt_; }
  Vec operator()(double t) const;

 private:
  double t0_ = 0.0;
  double dt_ = 0.0;
  Vec y0_, diff_, c3_, c4_, c5_;
};

// Piecewise interpolant assembled from consecutive accepted steps.
class DenseSolution {
 public:
  void append(DenseSegment seg) { segments_.push_back(std::move(seg)); }
  bool empty() const { return segments_.empty(); }
  double t_begin() const { return segments_.front().t_begin(); }
  double t_end() const { return segments_.back().t_end(); }
  std::size_t size() const { return segments_.size(); }
  const std::vector<DenseSegment>& segments() const { return segments_; }
  // Clamped to [t_begin, t_end].
  Vec operator()(double t) const;

 private:
  std::vector<DenseSegment> segments_;
};

class Dopri5 {
 public:
  Dopri5(OdeRhs rhs, double t0, Vec y0, StepperOptions opts = {});

  // Advances by one accepted step without passing t_limit. Throws
  // NumericalFailure when the step size underflows or max_steps is exceeded.
  const DenseSegment& step(double t_limit);

  double t() const { return t_; }
  const Vec& y() const { return y_; }
  const Vec& dydt() const { return k1_; }
  const DenseSegment& last_segment() const { return segment_; }
  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }
  std::size_t switching_splits() const { return splits_; }

  // Replaces the current state (e.g. after projection); restarts FSAL.
  void reset_state(const Vec& y);

 private:
  double initial_step_guess() const;
  double error_norm(const Vec& err, const Vec& y_old, const Vec& y_new) const;
  // Fraction θ ∈ (0, 1) of the tentative step at the first switching crossing,
  // or a negative value when there is none.
  double first_crossing(const DenseSegment& tentative) const;
  bool near_surface(const Vec& y_old, const Vec& y_new) const;

  OdeRhs rhs_;
  StepperOptions opts_;
  double t_;
  Vec y_;
  Vec k1_;
  double h_;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
  std::size_t splits_ = 0;
  DenseSegment segment_;
  Vec k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y_new_;
};

}  // namespace carnot
