#include "carnot/extremal_flow.hpp"

#include "carnot/detail/flow_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace carnot {

namespace {

void check_dimensions(const Vec& h0, const SkewMatrix& m, const ControlBody& body) {
  if (m.k() != body.dim() || h0.size() != body.dim()) {
    std::ostringstream msg;
    msg << "dimension mismatch: h0 has " << h0.size() << ", M is " << m.k() << "x" << m.k()
        << ", body has " << body.dim();
    throw InputError(msg.str());
  }
}

std::string format_value(double v) {
  std::ostringstream out;
  out.precision(3);
  out << v;
  return out.str();
}

}  // namespace

Vec vertical_rhs(const VerticalState& state, const ControlBody& body) {
  if (state.h.size() == body.dim() && state.h.allFinite() && state.h.norm() < kZeroGuard) {
    throw AbnormalCovectorError("vertical_rhs: h = 0 is the abnormal case");
  }
  if (state.m.k() != body.dim()) throw InputError("vertical_rhs: M does not match body dimension");
  return -(state.m.matrix() * support_gradient(body, state.h));
}

Vec extremal_control(const Vec& h, const ControlBody& body) { return support_gradient(body, h); }

SwitchingFn body_switching(const ControlBody& body) {
  if (!has_coordinate_kinks(body)) return {};
  const int k = body.dim();
  return [k](const Vec& y) -> Vec { return y.head(k); };
}

namespace detail {

Trajectory run_flow(const Vec& h0, const SkewMatrix& m, const ControlBody& body, TimeSpan span,
                    const FlowOptions& opts, bool with_lift) {
  check_dimensions(h0, m, body);
  if (!(span.end > span.begin) || !std::isfinite(span.begin) || !std::isfinite(span.end)) {
    throw InputError("integration span must satisfy begin < end");
  }
  if (opts.samples < 1) throw InputError("samples must be at least 1");

  const int k = body.dim();
  const AlgebraSpec spec(k);
  std::vector<std::pair<int, int>> pairs;
  for (int f = 0; f < spec.pair_count(); ++f) pairs.push_back(spec.pair_at(f));

  Trajectory traj;
  traj.m = m;
  traj.casimirs = kernel_basis(m, opts.kernel);
  std::vector<double> levels;
  for (const Vec& a : traj.casimirs.vectors) levels.push_back(a.dot(h0));

  const Mat& mm = m.matrix();
  OdeRhs rhs = [&](double, const Vec& y, Vec& dydt) {
    const Vec u = support_gradient(body, y.head(k));
    dydt.resize(y.size());
    dydt.head(k).noalias() = -(mm * u);
    if (!with_lift) return;
    const auto x = y.segment(k, k);
    dydt.segment(k, k) = u;
    for (std::size_t f = 0; f < pairs.size(); ++f) {
      const auto [i, j] = pairs[f];
      dydt[2 * k + static_cast<Eigen::Index>(f)] = 0.5 * (x[i] * u[j] - x[j] * u[i]);
    }
  };

  Vec y0 = Vec::Zero(with_lift ? 2 * k + spec.pair_count() : k);
  y0.head(k) = h0;

  // Returns (|H − 1|, max_a |I_a − I_a(h⁰)|) and the signed per-Casimir drifts.
  auto drifts = [&](const Vec& h, double& hd, Vec& cd) {
    hd = support(body, h) - 1.0;
    cd.resize(static_cast<Eigen::Index>(levels.size()));
    for (std::size_t a = 0; a < levels.size(); ++a) {
      cd[static_cast<Eigen::Index>(a)] = traj.casimirs.vectors[a].dot(h) - levels[a];
    }
  };
  auto check = [&](double t, double hd, const Vec& cd) {
    const double cmax = cd.size() ? cd.cwiseAbs().maxCoeff() : 0.0;
    traj.max_hamiltonian_drift = std::max(traj.max_hamiltonian_drift, std::abs(hd));
    traj.max_casimir_drift = std::max(traj.max_casimir_drift, cmax);
    if (std::abs(hd) > opts.max_drift || cmax > opts.max_drift) {
      std::ostringstream msg;
      msg << "invariant drift exceeded " << opts.max_drift << " at t = " << t
          << " (H drift " << format_value(hd) << ", Casimir drift " << format_value(cmax) << ")";
      throw DriftExceeded(msg.str(), t, traj);
    }
  };
  auto emit = [&](double t, const Vec& y) {
    const Vec h = y.head(k);
    double hd = 0.0;
    Vec cd;
    drifts(h, hd, cd);
    check(t, hd, cd);
    traj.times.push_back(t);
    traj.states.push_back(h);
    traj.controls.push_back(support_gradient(body, h));
    traj.hamiltonian_drift.push_back(hd);
    traj.casimir_drift.push_back(cd);
    if (with_lift) traj.lift.push_back(y.tail(y.size() - k));
  };

  StepperOptions stepper_opts;
  stepper_opts.rtol = opts.rtol;
  stepper_opts.atol = opts.atol;
  stepper_opts.switching = body_switching(body);
  Dopri5 stepper(rhs, span.begin, y0, stepper_opts);
  if (opts.keep_dense) traj.dense.emplace();

  const int n = opts.samples;
  const double width = span.end - span.begin;
  auto node = [&](int i) { return i == n ? span.end : span.begin + width * i / n; };

  emit(span.begin, y0);
  int next = 1;
  while (stepper.t() < span.end) {
    const DenseSegment& seg = stepper.step(span.end);
    {
      double hd = 0.0;
      Vec cd;
      drifts(stepper.y().head(k), hd, cd);
      check(stepper.t(), hd, cd);
    }
    while (next <= n && node(next) <= seg.t_end()) {
      if (next == n) {
        emit(span.end, stepper.y());
      } else {
        emit(node(next), seg(node(next)));
      }
      ++next;
    }
    if (opts.keep_dense) traj.dense->append(seg);
    if (opts.project_to_level) {
      Vec y = stepper.y();
      y.head(k) /= support(body, y.head(k));
      stepper.reset_state(y);
    }
  }
  traj.accepted_steps = stepper.accepted_steps();
  traj.rejected_steps = stepper.rejected_steps();
  return traj;
}

}  // namespace detail

Trajectory integrate_vertical(const Vec& h0, const SkewMatrix& m, const ControlBody& body,
                              TimeSpan span, const FlowOptions& opts) {
  check_dimensions(h0, m, body);
  return detail::run_flow(normalize_to_level(body, h0), m, body, span, opts, false);
}

PeriodResult detect_period(const OdeRhs& rhs, const Vec& h0, const PeriodOptions& opts,
                           const std::function<void(double, const Vec&)>& monitor) {
  Vec v0(h0.size());
  rhs(0.0, h0, v0);
  const double speed = v0.norm();
  if (!(speed > 0.0)) throw InputError("detect_period: h0 is an equilibrium");
  if (!(opts.t_max > 0.0)) throw InputError("detect_period: t_max must be positive");
  const Vec dir = v0 / speed;
  auto g = [&](const Vec& y) { return (y - h0).dot(dir); };

  StepperOptions stepper_opts;
  stepper_opts.rtol = opts.rtol;
  stepper_opts.atol = opts.atol;
  stepper_opts.switching = opts.switching;
  Dopri5 stepper(rhs, 0.0, h0, stepper_opts);

  double g_prev = 0.0;
  Vec vt(h0.size());
  while (stepper.t() < opts.t_max) {
    const DenseSegment& seg = stepper.step(opts.t_max);
    if (monitor) monitor(stepper.t(), stepper.y());
    const double g_end = g(stepper.y());
    if (g_prev < 0.0 && g_end >= 0.0) {
      double lo = seg.t_begin();
      double hi = seg.t_end();
      double t_event = hi;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(seg(mid));
        t_event = mid;
        if (std::abs(gm) <= opts.event_tol) break;
        (gm < 0.0 ? lo : hi) = mid;
      }
      const Vec y = seg(t_event);
      rhs(t_event, y, vt);
      const double distance = (y - h0).norm();
      if (distance <= opts.capture_radius && vt.dot(v0) > 0.0) {
        return PeriodResult{t_event, distance};
      }
    }
    g_prev = g_end;
  }
  throw HorizonExhausted("detect_period: no return to h0 before t_max = " +
                             format_value(opts.t_max),
                         opts.t_max);
}

Classification classify_k3(const Vec& h0, const SkewMatrix& m, const ControlBody& body,
                           const ClassifyOptions& opts) {
  if (m.k() != 3 || body.dim() != 3) {
    throw UnsupportedRankError(
        "classify_k3: constant/periodic classification is available only for k = 3");
  }
  check_dimensions(h0, m, body);

  Classification out;
  out.h0 = normalize_to_level(body, h0);
  const CasimirBasis basis = kernel_basis(m, opts.kernel);
  out.warnings = basis.warnings;
  if (basis.dimension() == 3) {
    out.extremal_class = Constant{};
    return out;
  }
  out.casimir = basis.vectors.front();
  const Vec& a = out.casimir;
  const Vec grad = support_gradient(body, out.h0);
  out.parallel_residual = (grad - grad.dot(a) * a).norm() / grad.norm();
  if (out.parallel_residual <= opts.parallel_tol) {
    out.extremal_class = Constant{};
    return out;
  }
  if (out.parallel_residual <= opts.borderline_upper) {
    out.warnings.push_back("borderline initial covector: parallel test residual " +
                           format_value(out.parallel_residual) +
                           " is close to the constant branch; the period may be very long");
  }

  PeriodOptions period_opts = opts.period;
  if (!period_opts.switching) period_opts.switching = body_switching(body);
  if (!(period_opts.t_max > 0.0)) {
    period_opts.t_max = 100.0 * 2.0 * std::numbers::pi / basis.sigma_max();
  }
  out.t_max = period_opts.t_max;

  OdeRhs rhs = [&](double, const Vec& y, Vec& dydt) {
    dydt.noalias() = -(m.matrix() * support_gradient(body, y));
  };
  const double level = a.dot(out.h0);
  auto monitor = [&](double t, const Vec& y) {
    const double hd = std::abs(support(body, y) - 1.0);
    const double cd = std::abs(a.dot(y) - level);
    if (hd > opts.max_drift || cd > opts.max_drift) {
      throw DriftExceeded("invariant drift exceeded during return detection at t = " +
                              format_value(t),
                          t, Trajectory{});
    }
  };

  try {
    const PeriodResult r = detect_period(rhs, out.h0, period_opts, monitor);
    if (r.residual <= opts.max_return_residual) {
      out.extremal_class = Periodic{r.period, r.residual};
    } else {
      out.extremal_class = Unclassified{"return residual " + format_value(r.residual) +
                                        " exceeds " + format_value(opts.max_return_residual)};
    }
  } catch (const HorizonExhausted& e) {
    out.extremal_class = Unclassified{std::string("horizon exhausted: ") + e.what()};
  } catch (const DriftExceeded& e) {
    out.extremal_class = Unclassified{e.what()};
  }
  return out;
}

ReturnWitness quasi_periodicity_check(const Vec& h0, const SkewMatrix& m,
                                      const ControlBody& body, double t_max, double delta,
                                      const WitnessOptions& opts) {
  check_dimensions(h0, m, body);
  if (!(t_max > delta) || delta < 0.0) throw InputError("quasi_periodicity_check: need 0 <= delta < t_max");
  if (!(opts.grid_step > 0.0)) throw InputError("quasi_periodicity_check: grid_step must be positive");

  OdeRhs rhs = [&](double, const Vec& y, Vec& dydt) {
    dydt.noalias() = -(m.matrix() * support_gradient(body, y));
  };
  StepperOptions stepper_opts;
  stepper_opts.rtol = opts.rtol;
  stepper_opts.atol = opts.atol;
  stepper_opts.switching = body_switching(body);
  Dopri5 stepper(rhs, 0.0, h0, stepper_opts);
  DenseSolution dense;
  while (stepper.t() < t_max) dense.append(stepper.step(t_max));

  auto distance = [&](double t) { return (dense(t) - h0).norm(); };

  const auto nodes = static_cast<int>(std::ceil((t_max - delta) / opts.grid_step));
  std::vector<double> ts(static_cast<std::size_t>(nodes) + 1);
  std::vector<double> ds(ts.size());
  for (int i = 0; i <= nodes; ++i) {
    ts[i] = i == nodes ? t_max : delta + opts.grid_step * i;
    ds[i] = distance(ts[i]);
  }

  ReturnWitness best{ds[0], ts[0]};
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const bool left_ok = i == 0 || ds[i] <= ds[i - 1];
    const bool right_ok = i + 1 == ts.size() || ds[i] <= ds[i + 1];
    if (!(left_ok && right_ok)) continue;
    if (ds[i] < best.min_return_distance) best = {ds[i], ts[i]};
    // Golden-section refinement inside the neighbouring grid cells.
    double lo = i == 0 ? ts[i] : ts[i - 1];
    double hi = i + 1 == ts.size() ? ts[i] : ts[i + 1];
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = distance(x1);
    double f2 = distance(x2);
    for (int it = 0; it < 100 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - kInvPhi * (hi - lo);
        f1 = distance(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + kInvPhi * (hi - lo);
        f2 = distance(x2);
      }
    }
    const double tm = 0.5 * (lo + hi);
    const double dm = distance(tm);
    if (dm < best.min_return_distance) best = {dm, tm};
  }
  return best;
}

}  // namespace carnot
