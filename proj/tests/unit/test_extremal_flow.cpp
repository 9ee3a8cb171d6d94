#include "carnot/errors.hpp"
#include "carnot/extremal_flow.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace carnot;
using carnot::testing::random_body;
using carnot::testing::random_direction;
using carnot::testing::random_skew;

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Closed-form return distance for the unit-ball two-block flow from
// h0 = (1,1,1,1)/2: each block rotates rigidly, so
// ‖h(t) − h0‖² = (1 − cos αt) + (1 − cos βt).
double two_block_distance(double alpha, double beta, double t) {
  return std::sqrt((1.0 - std::cos(alpha * t)) + (1.0 - std::cos(beta * t)));
}

// Inverse of the lp gradient map up to scale: ∇H(h) ∥ a for this h.
Vec lp_preimage(const Vec& a, double p) {
  Vec h(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    h[i] = std::copysign(std::pow(std::abs(a[i]), p - 1.0), a[i]);
  }
  return h;
}

}  // namespace

TEST_CASE("Heisenberg vertical flow is a unit rotation") {
  const auto m = SkewMatrix::from_pairs(2, {{{1, 2}, 1.0}});
  FlowOptions opts;
  opts.samples = 200;
  const auto traj = integrate_vertical(vec({1.0, 0.0}), m, ControlBody::unit_ball(2),
                                       {0.0, 2.0 * kPi}, opts);
  REQUIRE(traj.times.size() == 201);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    CHECK((traj.states[i] - vec({std::cos(t), std::sin(t)})).norm() < 1e-9);
    CHECK((traj.controls[i] - traj.states[i]).norm() < 1e-9);
  }
  CHECK(traj.times.back() == 2.0 * kPi);
  CHECK(traj.max_hamiltonian_drift < 1e-9);
}

TEST_CASE("vertical_rhs and controls") {
  const auto m = SkewMatrix::from_pairs(2, {{{1, 2}, 1.0}});
  VerticalState s{vec({1.0, 0.0}), m};
  CHECK((vertical_rhs(s, ControlBody::unit_ball(2)) - vec({0.0, 1.0})).norm() < 1e-15);
  s.h = Vec::Zero(2);
  CHECK_THROWS_AS(vertical_rhs(s, ControlBody::unit_ball(2)), AbnormalCovectorError);
  CHECK_THROWS_AS(integrate_vertical(Vec::Zero(2), m, ControlBody::unit_ball(2), {0.0, 1.0}),
                  AbnormalCovectorError);
  CHECK_THROWS_AS(integrate_vertical(vec({1, 0, 0}), m, ControlBody::unit_ball(2), {0.0, 1.0}),
                  InputError);
  CHECK_THROWS_AS(integrate_vertical(vec({1, 0}), m, ControlBody::unit_ball(2), {1.0, 1.0}),
                  InputError);
}

TEST_CASE("H and Casimirs are conserved on random configurations") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 12; ++trial) {
    const int k = 2 + trial % 4;
    const auto body = random_body(rng, k, trial % 3);
    const auto m = random_skew(rng, k);
    FlowOptions opts;
    opts.samples = 100;
    const auto traj = integrate_vertical(random_direction(rng, k), m, body, {0.0, 10.0}, opts);
    CHECK(traj.max_hamiltonian_drift <= 1e-8);
    CHECK(traj.max_casimir_drift <= 1e-8);
    CHECK(traj.casimirs.dimension() == k % 2);
  }
}

TEST_CASE("ellipsoid flow matches the matrix exponential") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 6; ++trial) {
    const int k = 2 + trial % 4;
    const Mat a = carnot::testing::random_spd(rng, k);
    const auto body = ControlBody::ellipsoid(a);
    const auto m = random_skew(rng, k);
    const Vec h0 = normalize_to_level(body, random_direction(rng, k));
    FlowOptions opts;
    opts.samples = 100;
    const auto traj = integrate_vertical(h0, m, body, {0.0, 10.0}, opts);
    const Mat gen = m.matrix() * a;
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const Vec ref = carnot::testing::linear_flow(gen, h0, traj.times[i]);
      worst = std::max(worst, (traj.states[i] - ref).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("time reversal: flowing with −M undoes the flow with M") {
  std::mt19937_64 rng(43);
  for (int family = 0; family < 3; ++family) {
    const auto body = random_body(rng, 3, family);
    const auto m = random_skew(rng, 3);
    const Vec h0 = normalize_to_level(body, random_direction(rng, 3));
    const auto fwd = integrate_vertical(h0, m, body, {0.0, 3.0});
    const auto back = integrate_vertical(fwd.states.back(), m.scaled(-1.0), body, {0.0, 3.0});
    CHECK((back.states.back() - h0).norm() < 1e-8);
  }
}

TEST_CASE("zero M gives a constant trajectory") {
  const auto body = ControlBody::lp_ball(3, 3.0, 1.0);
  const Vec h0 = normalize_to_level(body, vec({0.2, 0.5, -0.7}));
  const auto traj = integrate_vertical(h0, SkewMatrix::zero(3), body, {0.0, 5.0});
  for (const auto& h : traj.states) CHECK((h - h0).norm() == 0.0);
}

TEST_CASE("projection option reduces Hamiltonian drift") {
  std::mt19937_64 rng(44);
  const auto body = random_body(rng, 4, 1);
  const Vec h0 = random_direction(rng, 4);
  const auto m = random_skew(rng, 4);
  FlowOptions opts;
  const auto plain = integrate_vertical(h0, m, body, {0.0, 10.0}, opts);
  opts.project_to_level = true;
  const auto projected = integrate_vertical(h0, m, body, {0.0, 10.0}, opts);
  CHECK(projected.max_hamiltonian_drift < plain.max_hamiltonian_drift);
  CHECK(std::abs(projected.hamiltonian_drift.back()) < 1e-14);
}

TEST_CASE("loose tolerances trigger drift failure with a partial trajectory") {
  const auto body = ControlBody::lp_ball(3, 4.0, 1.0);
  FlowOptions opts;
  opts.rtol = 1e-3;
  opts.atol = 1e-3;
  opts.max_drift = 1e-9;
  try {
    integrate_vertical(vec({1.0, 0.3, 0.2}), SkewMatrix::from_upper(3, vec({1.0, 2.0, 3.0})),
                       body, {0.0, 50.0}, opts);
    FAIL("expected DriftExceeded");
  } catch (const DriftExceeded& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.partial().times.size() < 1001);
  }
}

TEST_CASE("period of the unit-ball k = 3 flow is 2π/μ") {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = random_skew(rng, 3);
    const auto cls = classify_k3(random_direction(rng, 3), m, ControlBody::unit_ball(3));
    REQUIRE(std::holds_alternative<Periodic>(cls.extremal_class));
    const double mu = m.upper().norm();
    CHECK(std::abs(std::get<Periodic>(cls.extremal_class).period - 2.0 * kPi / mu) <= 1e-7);
    CHECK(std::get<Periodic>(cls.extremal_class).return_residual <= 1e-8);
  }
}

TEST_CASE("Heisenberg-like k = 3 period for a single pair") {
  const auto m = SkewMatrix::from_pairs(3, {{{1, 2}, 2.0}});
  const auto cls = classify_k3(vec({1.0, 0.0, 0.5}), m, ControlBody::unit_ball(3));
  REQUIRE(std::holds_alternative<Periodic>(cls.extremal_class));
  CHECK(std::get<Periodic>(cls.extremal_class).period == doctest::Approx(kPi).epsilon(1e-9));
  CHECK((cls.casimir - vec({0.0, 0.0, 1.0})).norm() < 1e-15);
}

TEST_CASE("period scales inversely with M") {
  const auto body = ControlBody::lp_ball(3, 4.0, 1.0);
  const auto m = SkewMatrix::from_upper(3, vec({0.7, -0.4, 1.1}));
  const Vec h0 = vec({0.3, 0.8, -0.5});
  const auto base = classify_k3(h0, m, body);
  REQUIRE(std::holds_alternative<Periodic>(base.extremal_class));
  const double t1 = std::get<Periodic>(base.extremal_class).period;
  for (double lambda : {0.5, 3.0}) {
    const auto scaled = classify_k3(h0, m.scaled(lambda), body);
    REQUIRE(std::holds_alternative<Periodic>(scaled.extremal_class));
    const double tl = std::get<Periodic>(scaled.extremal_class).period;
    CHECK(std::abs(tl - t1 / lambda) <= 1e-7 * t1 / lambda);
  }
}

TEST_CASE("constant branch for ∇H(h0) parallel to the Casimir") {
  const auto m = SkewMatrix::from_upper(3, vec({1.0, 1.0, 1.0}));
  const Vec a = kernel_basis(m).vectors.front();
  Mat shape = Mat::Identity(3, 3);
  shape(0, 0) = 2.0;
  shape(1, 2) = shape(2, 1) = 0.3;
  const auto ell = ControlBody::ellipsoid(shape);
  const Vec h_ell = shape.ldlt().solve(a);
  const auto cls = classify_k3(h_ell, m, ell);
  CHECK(std::holds_alternative<Constant>(cls.extremal_class));
  CHECK(cls.parallel_residual <= 1e-12);

  const auto lp = ControlBody::lp_ball(3, 3.0, 1.0);
  const Vec h_lp = lp_preimage(a, 3.0);
  CHECK(std::holds_alternative<Constant>(classify_k3(h_lp, m, lp).extremal_class));
  const auto traj = integrate_vertical(h_lp, m, lp, {0.0, 10.0});
  const Vec h0 = normalize_to_level(lp, h_lp);
  for (const auto& h : traj.states) CHECK((h - h0).norm() <= 1e-10);
}

TEST_CASE("classification of M = 0 and unsupported ranks") {
  const auto cls = classify_k3(vec({1.0, 2.0, 3.0}), SkewMatrix::zero(3), ControlBody::unit_ball(3));
  CHECK(std::holds_alternative<Constant>(cls.extremal_class));
  CHECK(cls.casimir.size() == 0);
  CHECK_THROWS_AS(classify_k3(vec({1, 0, 0, 0}), SkewMatrix::two_block(1, 1), ControlBody::unit_ball(4)),
                  UnsupportedRankError);
}

TEST_CASE("borderline initial covectors warn") {
  const auto m = SkewMatrix::from_pairs(3, {{{1, 2}, 1.0}});
  const Vec h0 = vec({1e-7, 0.0, 1.0});
  const auto cls = classify_k3(h0, m, ControlBody::unit_ball(3));
  CHECK_FALSE(cls.warnings.empty());
  CHECK(cls.parallel_residual > 1e-9);
  CHECK(cls.parallel_residual < 1e-6);
}

TEST_CASE("a tiny horizon yields Unclassified") {
  ClassifyOptions opts;
  opts.period.t_max = 1.0;
  const auto cls = classify_k3(vec({1.0, 0.0, 0.0}), SkewMatrix::from_pairs(3, {{{1, 2}, 1.0}}),
                               ControlBody::unit_ball(3), opts);
  CHECK(std::holds_alternative<Unclassified>(cls.extremal_class));
}

TEST_CASE("detect_period on a bare oscillator") {
  OdeRhs rhs = [](double, const Vec& y, Vec& dy) {
    dy.resize(2);
    dy[0] = -2.0 * y[1];
    dy[1] = 2.0 * y[0];
  };
  PeriodOptions opts;
  opts.t_max = 10.0;
  const auto r = detect_period(rhs, vec({1.0, 0.0}), opts);
  CHECK(std::abs(r.period - kPi) < 1e-9);
  CHECK(r.residual < 1e-9);
  opts.t_max = 1.0;
  CHECK_THROWS_AS(detect_period(rhs, vec({1.0, 0.0}), opts), HorizonExhausted);
}

TEST_CASE("closed-form two-block oracle reproduces the frozen minimum") {
  const double frozen_min = 0.031275635770844766;
  const double frozen_t = 182.17625697010018;
  CHECK(std::abs(two_block_distance(1.0, std::sqrt(2.0), frozen_t) - frozen_min) < 1e-12);
  double coarse = 1e300;
  for (double t = 0.5; t <= 200.0; t += 1e-3) {
    coarse = std::min(coarse, two_block_distance(1.0, std::sqrt(2.0), t));
  }
  CHECK(coarse >= frozen_min - 1e-12);
  CHECK(coarse < frozen_min + 1e-5);
}

TEST_CASE("quasi-periodicity witness for incommensurate two-block M") {
  const Vec h0 = vec({0.5, 0.5, 0.5, 0.5});
  const auto w = quasi_periodicity_check(h0, SkewMatrix::two_block(1.0, std::sqrt(2.0)),
                                         ControlBody::unit_ball(4), 200.0, 0.5);
  CHECK(w.min_return_distance > 0.01);
  CHECK(std::abs(w.min_return_distance - 0.031275635770844766) < 1e-7);
  CHECK(std::abs(w.time_of_min - 182.17625697010018) < 1e-3);
}

TEST_CASE("commensurate and single-block cases return") {
  const Vec h0 = vec({0.5, 0.5, 0.5, 0.5});
  const auto w = quasi_periodicity_check(h0, SkewMatrix::two_block(1.0, 1.0),
                                         ControlBody::unit_ball(4), 7.0, 0.5);
  CHECK(w.min_return_distance <= 1e-8);
  CHECK(std::abs(w.time_of_min - 2.0 * kPi) < 1e-6);

  const auto single = quasi_periodicity_check(h0, SkewMatrix::two_block(3.0, 0.0),
                                              ControlBody::unit_ball(4), 3.0, 0.5);
  CHECK(single.min_return_distance <= 1e-8);
  CHECK(std::abs(single.time_of_min - 2.0 * kPi / 3.0) < 1e-6);
}
