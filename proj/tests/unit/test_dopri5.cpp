#include "carnot/dopri5.hpp"
#include "carnot/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace carnot;

namespace {

OdeRhs oscillator() {
  return [](double, const Vec& y, Vec& dy) {
    dy.resize(2);
    dy[0] = y[1];
    dy[1] = -y[0];
  };
}

Vec run_to(Dopri5& s, double t1, DenseSolution* dense = nullptr) {
  while (s.t() < t1) {
    const auto& seg = s.step(t1);
    if (dense) dense->append(seg);
  }
  return s.y();
}

}  // namespace

TEST_CASE("harmonic oscillator over ten periods") {
  Vec y0(2);
  y0 << 1.0, 0.0;
  Dopri5 s(oscillator(), 0.0, y0);
  const double t1 = 20.0 * std::numbers::pi;
  const Vec y = run_to(s, t1);
  CHECK(s.t() == t1);
  CHECK(std::abs(y[0] - 1.0) < 1e-8);
  CHECK(std::abs(y[1]) < 1e-8);
  CHECK(s.accepted_steps() > 10);
}

TEST_CASE("non-autonomous scalar equation y' = t y") {
  OdeRhs rhs = [](double t, const Vec& y, Vec& dy) { dy = t * y; };
  Dopri5 s(rhs, 0.0, Vec::Ones(1));
  const Vec y = run_to(s, 2.0);
  CHECK(std::abs(y[0] - std::exp(2.0)) < 1e-9 * std::exp(2.0));
}

TEST_CASE("dense output is accurate between steps") {
  Vec y0(2);
  y0 << 1.0, 0.0;
  Dopri5 s(oscillator(), 0.0, y0);
  DenseSolution dense;
  run_to(s, 10.0, &dense);
  double worst = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double t = 10.0 * i / 10000.0;
    const Vec y = dense(t);
    worst = std::max(worst, std::abs(y[0] - std::cos(t)) + std::abs(y[1] + std::sin(t)));
  }
  CHECK(worst < 1e-8);
  CHECK(dense.t_begin() == 0.0);
  CHECK(dense.t_end() == 10.0);
  // clamped outside the range
  CHECK((dense(-1.0) - y0).norm() == 0.0);
}

TEST_CASE("segment endpoints reproduce step states") {
  Vec y0(2);
  y0 << 0.0, 1.0;
  Dopri5 s(oscillator(), 0.0, y0);
  const Vec before = s.y();
  const auto& seg = s.step(5.0);
  CHECK((seg(seg.t_begin()) - before).norm() < 1e-15);
  CHECK((seg(seg.t_end()) - s.y()).norm() < 1e-14);
}

TEST_CASE("short output intervals do not collapse the step size") {
  Vec y0(2);
  y0 << 1.0, 0.0;
  Dopri5 free_run(oscillator(), 0.0, y0);
  run_to(free_run, 10.0);
  Dopri5 chopped(oscillator(), 0.0, y0);
  for (int i = 1; i <= 100; ++i) run_to(chopped, 0.1 * i);
  // at most one extra step per forced landing
  CHECK(chopped.accepted_steps() <= free_run.accepted_steps() + 100);
  CHECK((chopped.y() - free_run.y()).norm() < 1e-8);
}

TEST_CASE("reset_state restarts from a new state") {
  Vec y0(2);
  y0 << 1.0, 0.0;
  Dopri5 s(oscillator(), 0.0, y0);
  run_to(s, 1.0);
  s.reset_state(y0);
  CHECK((s.dydt() - Vec::Unit(2, 1) * -1.0).norm() < 1e-15);
}

TEST_CASE("blow-up raises a numerical failure") {
  OdeRhs rhs = [](double, const Vec& y, Vec& dy) { dy = y.cwiseProduct(y); };
  Dopri5 s(rhs, 0.0, Vec::Ones(1));
  CHECK_THROWS_AS(run_to(s, 2.0), NumericalFailure);
}

TEST_CASE("switching surfaces split steps at a non-smooth crossing") {
  // x' = 1 from x = −1; v' = sign(x)|x|^{1/3}, so v(2) = (3/4)(|1|^{4/3} − |−1|^{4/3}) = 0.
  OdeRhs rhs = [](double, const Vec& y, Vec& dy) {
    dy.resize(2);
    dy[0] = 1.0;
    dy[1] = std::copysign(std::cbrt(std::abs(y[0])), y[0]);
  };
  Vec y0(2);
  y0 << -1.0, 0.0;
  StepperOptions opts;
  opts.switching = [](const Vec& y) -> Vec { return y.head(1); };
  Dopri5 split(rhs, 0.0, y0, opts);
  DenseSolution dense;
  run_to(split, 2.0, &dense);
  CHECK(split.switching_splits() == 1);
  CHECK(std::abs(split.y()[1]) < 1e-11);
  // one accepted step ends on the surface
  bool landed = false;
  for (const auto& seg : dense.segments()) landed = landed || std::abs(seg.t_end() - 1.0) < 1e-12;
  CHECK(landed);
}

TEST_CASE("switching is inert for smooth problems without crossings") {
  Vec y0(2);
  y0 << 2.0, 0.0;
  StepperOptions opts;
  opts.switching = [](const Vec& y) -> Vec { return y.head(1) + Vec::Constant(1, 3.0); };
  Dopri5 s(oscillator(), 0.0, y0, opts);
  run_to(s, 10.0);
  CHECK(s.switching_splits() == 0);
  CHECK(std::abs(s.y()[0] - 2.0 * std::cos(10.0)) < 1e-10);
}
