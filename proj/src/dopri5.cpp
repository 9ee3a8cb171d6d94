#include "carnot/dopri5.hpp"

#include "carnot/errors.hpp"

#include <algorithm>
#include <cmath>

namespace carnot {

namespace {

// Dormand–Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

}  // namespace

Vec DenseSegment::operator()(double t) const {
  const double theta = dt_ > 0.0 ? (t - t0_) / dt_ : 0.0;
  const double theta1 = 1.0 - theta;
  return y0_ + theta * (diff_ + theta1 * (c3_ + theta * (c4_ + theta1 * c5_)));
}

Vec DenseSolution::operator()(double t) const {
  if (segments_.empty()) throw InputError("DenseSolution: empty");
  if (t <= t_begin()) return segments_.front()(t_begin());
  if (t >= t_end()) return segments_.back()(t_end());
  const auto it = std::upper_bound(
      segments_.begin(), segments_.end(), t,
      [](double value, const DenseSegment& seg) { return value < seg.t_end(); });
  return (*it)(t);
}

Dopri5::Dopri5(OdeRhs rhs, double t0, Vec y0, StepperOptions opts)
    : rhs_(std::move(rhs)), opts_(opts), t_(t0), y_(std::move(y0)) {
  k1_.resize(y_.size());
  rhs_(t_, y_, k1_);
  h_ = opts_.initial_step > 0.0 ? opts_.initial_step : initial_step_guess();
}

void Dopri5::reset_state(const Vec& y) {
  y_ = y;
  rhs_(t_, y_, k1_);
}

double Dopri5::error_norm(const Vec& err, const Vec& y_old, const Vec& y_new) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double scale =
        opts_.atol + opts_.rtol * std::max(std::abs(y_old[i]), std::abs(y_new[i]));
    const double r = err[i] / scale;
    sum += r * r;
  }
  return err.size() ? std::sqrt(sum / static_cast<double>(err.size())) : 0.0;
}

double Dopri5::initial_step_guess() const {
  auto scaled_norm = [&](const Vec& v) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double r = v[i] / (opts_.atol + opts_.rtol * std::abs(y_[i]));
      sum += r * r;
    }
    return v.size() ? std::sqrt(sum / static_cast<double>(v.size())) : 0.0;
  };
  const double d0 = scaled_norm(y_);
  const double d1n = scaled_norm(k1_);
  const double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  Vec y1 = y_ + h0 * k1_;
  Vec f1(y_.size());
  rhs_(t_ + h0, y1, f1);
  const double d2 = scaled_norm(f1 - k1_) / h0;
  const double big = std::max(d1n, d2);
  const double h1 = big <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / big, 0.2);
  return std::min({100.0 * h0, h1, opts_.max_step});
}

double Dopri5::first_crossing(const DenseSegment& tentative) const {
  const Vec s0 = opts_.switching(tentative(tentative.t_begin()));
  const Vec s1 = opts_.switching(tentative(tentative.t_end()));
  const double band = opts_.switching_band * std::max(1.0, s0.cwiseAbs().maxCoeff());
  const double span = tentative.t_end() - tentative.t_begin();
  double best = -1.0;
  for (Eigen::Index i = 0; i < s0.size(); ++i) {
    if (std::abs(s0[i]) <= band || s0[i] * s1[i] >= 0.0) continue;
    double lo = 0.0, hi = best > 0.0 ? best : 1.0;
    if (opts_.switching(tentative(tentative.t_begin() + hi * span))[i] * s0[i] > 0.0) continue;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double sm = opts_.switching(tentative(tentative.t_begin() + mid * span))[i];
      (sm * s0[i] > 0.0 ? lo : hi) = mid;
    }
    best = hi;
  }
  return best;
}

bool Dopri5::near_surface(const Vec& y_old, const Vec& y_new) const {
  const Vec s0 = opts_.switching(y_old);
  const Vec s1 = opts_.switching(y_new);
  for (Eigen::Index i = 0; i < s0.size(); ++i) {
    if (std::min(std::abs(s0[i]), std::abs(s1[i])) <= std::abs(s1[i] - s0[i])) return true;
  }
  return false;
}

const DenseSegment& Dopri5::step(double t_limit) {
  const auto n = y_.size();
  k2_.resize(n), k3_.resize(n), k4_.resize(n), k5_.resize(n), k6_.resize(n), k7_.resize(n);
  bool rejected_last = false;
  double forced = 0.0;  // step length fixed by a switching crossing
  double carried = 0.0;
  while (true) {
    if (accepted_ + rejected_ >= opts_.max_steps) {
      throw NumericalFailure("Dopri5: step budget exhausted", t_);
    }
    const double remaining = t_limit - t_;
    if (!(remaining > 0.0)) throw InputError("Dopri5: t_limit is not ahead of current time");
    const double proposed = std::min(h_, opts_.max_step);
    double h = proposed;
    if (forced > 0.0) {
      h = forced;
    } else if (h >= remaining || remaining - h < 1e-3 * h) {
      // Land exactly on t_limit.
      h = remaining;
    }
    if (h < opts_.min_step * std::max(1.0, std::abs(t_))) {
      throw NumericalFailure("Dopri5: step size underflow", t_);
    }

    tmp_ = y_ + h * (a21 * k1_);
    rhs_(t_ + c2 * h, tmp_, k2_);
    tmp_ = y_ + h * (a31 * k1_ + a32 * k2_);
    rhs_(t_ + c3 * h, tmp_, k3_);
    tmp_ = y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    rhs_(t_ + c4 * h, tmp_, k4_);
    tmp_ = y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    rhs_(t_ + c5 * h, tmp_, k5_);
    tmp_ = y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    const double t_new = (h == remaining) ? t_limit : t_ + h;
    rhs_(t_new, tmp_, k6_);
    y_new_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
    rhs_(t_new, y_new_, k7_);

    const Vec err = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    double norm = error_norm(err, y_, y_new_);
    if (opts_.switching && near_surface(y_, y_new_)) norm *= opts_.switching_error_scale;
    const bool finite = std::isfinite(norm) && y_new_.allFinite();
    double factor = finite ? kSafety * std::pow(norm, -0.2) : kMinFactor;
    factor = std::clamp(std::isfinite(factor) ? factor : kMaxFactor, kMinFactor, kMaxFactor);

    if (finite && norm <= 1.0) {
      if (rejected_last) factor = std::min(factor, 1.0);
      Vec diff = y_new_ - y_;
      Vec bspl = h * k1_ - diff;
      Vec c4v = diff - h * k7_ - bspl;
      Vec c5v = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
      DenseSegment tentative(t_, t_new - t_, y_, std::move(diff), std::move(bspl),
                             std::move(c4v), std::move(c5v));
      if (opts_.switching && forced == 0.0) {
        const double theta = first_crossing(tentative);
        if (theta > 0.0 && theta < 1.0 && theta * h > opts_.min_step * std::max(1.0, std::abs(t_))) {
          forced = theta * h;
          carried = std::max(h * factor, proposed);
          ++splits_;
          continue;
        }
      }
      segment_ = std::move(tentative);
      t_ = t_new;
      y_.swap(y_new_);
      k1_.swap(k7_);
      if (forced > 0.0) {
        h_ = carried;
      } else if (h < proposed && factor >= 1.0) {
        // A step shortened to hit t_limit keeps the previous proposal.
        h_ = std::max(h * factor, proposed);
      } else {
        h_ = h * factor;
      }
      ++accepted_;
      return segment_;
    }
    ++rejected_;
    rejected_last = true;
    forced = 0.0;
    h_ = h * factor;
  }
}

}  // namespace carnot
