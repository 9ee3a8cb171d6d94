#pragma once

// Normal extremals on the level set H = 1: the vertical subsystem
//   ḣ = −M ∇H(h),   ḣ_ij = 0,
// with invariant monitoring, extremal controls u = ∇H(h), and the k = 3
// constant/periodic classification by first-return detection.

#include "carnot/convex_bodies.hpp"
#include "carnot/dopri5.hpp"
#include "carnot/errors.hpp"
#include "carnot/lie_structure.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace carnot {

struct VerticalState {
  Vec h;
  SkewMatrix m = SkewMatrix::zero(2);
};

struct FlowOptions {
  double rtol = kDefaultRtol;
  double atol = kDefaultAtol;
  // Integration aborts once |H − 1| or any |I_a − I_a(h⁰)| exceeds this.
  double max_drift = 1e-7;
  // Uniform output grid: samples + 1 nodes including both ends.
  int samples = 1000;
  // Rescale h to H = 1 after every accepted step.
  bool project_to_level = false;
  bool keep_dense = false;
  KernelOptions kernel;
};

struct Trajectory {
  SkewMatrix m = SkewMatrix::zero(2);
  CasimirBasis casimirs;
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> controls;
  std::vector<double> hamiltonian_drift;  // H(h(t)) − 1
  std::vector<Vec> casimir_drift;         // I_a(h(t)) − I_a(h⁰), one entry per basis vector
  // When integrated together with the horizontal lift: (x, y) per sample.
  std::vector<Vec> lift;
  // Maxima over every accepted step and every output node.
  double max_hamiltonian_drift = 0.0;
  double max_casimir_drift = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::optional<DenseSolution> dense;
};

// Invariant drift above FlowOptions::max_drift. Carries the samples emitted
// before the offending time.
class DriftExceeded : public NumericalFailure {
 public:
  DriftExceeded(const std::string& what, double time, Trajectory partial)
      : NumericalFailure(what, time), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

// Switching surfaces h_i = 0 for bodies with coordinate kinks (first k
// components of the state); empty otherwise.
SwitchingFn body_switching(const ControlBody& body);

// −M ∇H(h). Throws AbnormalCovectorError for h = 0.
Vec vertical_rhs(const VerticalState& state, const ControlBody& body);

// u = ∇H(h), a point of ∂U.
Vec extremal_control(const Vec& h, const ControlBody& body);

struct TimeSpan {
  double begin = 0.0;
  double end = 0.0;
};

// h0 is normalized to H = 1 first (normalize_to_level).
Trajectory integrate_vertical(const Vec& h0, const SkewMatrix& m, const ControlBody& body,
                              TimeSpan span, const FlowOptions& opts = {});

struct PeriodOptions {
  double capture_radius = 1e-4;
  double event_tol = 1e-12;
  // 0 selects 100 · 2π / σ_max(M) in classify_k3.
  double t_max = 0.0;
  double rtol = kDefaultRtol;
  double atol = kDefaultAtol;
  SwitchingFn switching;
};

struct PeriodResult {
  double period = 0.0;
  double residual = 0.0;  // ‖h(T) − h⁰‖
};

// Event-based first return to h0 for the autonomous flow ḣ = rhs(h).
// Monitors g(t) = ⟨h(t) − h⁰, v̂⟩ with v̂ = ḣ(0)/‖ḣ(0)‖; a rising zero of g
// inside the capture radius with ⟨ḣ(t), ḣ(0)⟩ > 0 is refined by bisection to
// |g| ≤ event_tol. `monitor` sees every accepted step. Throws
// HorizonExhausted when no return occurs before t_max.
PeriodResult detect_period(const OdeRhs& rhs, const Vec& h0, const PeriodOptions& opts,
                           const std::function<void(double, const Vec&)>& monitor = {});

struct Constant {};
struct Periodic {
  double period = 0.0;
  double return_residual = 0.0;
};
struct Unclassified {
  std::string reason;
};
using ExtremalClass = std::variant<Constant, Periodic, Unclassified>;

struct ClassifyOptions {
  double parallel_tol = 1e-9;
  double borderline_upper = 1e-6;
  double max_return_residual = 1e-8;
  double max_drift = 1e-7;
  PeriodOptions period;
  KernelOptions kernel;
};

struct Classification {
  ExtremalClass extremal_class;
  // ‖∇H(h⁰) − ⟨∇H(h⁰), a⟩a‖ / ‖∇H(h⁰)‖; 0 when M = 0.
  double parallel_residual = 0.0;
  Vec casimir;  // empty when M = 0
  Vec h0;       // normalized initial covector
  double t_max = 0.0;
  std::vector<std::string> warnings;
};

// k = 3 only (UnsupportedRankError otherwise).
Classification classify_k3(const Vec& h0, const SkewMatrix& m, const ControlBody& body,
                           const ClassifyOptions& opts = {});

struct ReturnWitness {
  double min_return_distance = 0.0;
  double time_of_min = 0.0;
};

struct WitnessOptions {
  double grid_step = 0.01;
  double rtol = kDefaultRtol;
  double atol = kDefaultAtol;
};

// min ‖h(t) − h⁰‖ over t ∈ [δ, t_max]: sampled on a uniform grid, with every
// grid-local minimum refined by golden-section search on the dense output.
// Finite-horizon witness only.
ReturnWitness quasi_periodicity_check(const Vec& h0, const SkewMatrix& m,
                                      const ControlBody& body, double t_max, double delta,
                                      const WitnessOptions& opts = {});

}  // namespace carnot
