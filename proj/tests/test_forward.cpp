#include <cmath>

#include "desk.hpp"
#include "doctest.h"
#include "fracwave/caputo.hpp"
#include "fracwave/error.hpp"
#include "fracwave/forward.hpp"

using namespace fracwave;
using desk::pi;

TEST_CASE("stability step and time grid") {
  const Mesh m = Mesh::interval(0.0, 1.0, 200);
  const Coefficients k = uniform_coefficients(m, 0.5, 0.0);
  CHECK(stability_dt(m, k, 0.9) == doctest::Approx(0.0045).epsilon(1e-13));
  const Coefficients fast = uniform_coefficients(m, 0.5, 0.0, 0.0, 0.0, 1.0, 4.0);
  CHECK(stability_dt(m, fast, 0.9) == doctest::Approx(0.00225).epsilon(1e-13));
  CHECK_THROWS_AS(stability_dt(m, k, 1.0), PreconditionError);

  const TimeGrid g = make_time_grid(3.0, 0.0045);
  CHECK(g.steps == 667);
  CHECK(g.dt <= 0.0045);
  CHECK(g.time(g.steps) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("coefficient validation") {
  const Mesh m = Mesh::interval(0.0, 1.0, 10);
  Coefficients k = uniform_coefficients(m, 0.5, 1.0);
  CHECK_NOTHROW(k.validate(m));
  Coefficients bad = k;
  bad.alpha[3] = 1.0;
  CHECK_THROWS_AS(bad.validate(m), PreconditionError);
  bad = k;
  bad.a[2] = 0.5 * k.a0;
  CHECK_THROWS_AS(bad.validate(m), PreconditionError);
  bad = k;
  bad.M = 0.5 * a_priori_norm(k, m);
  CHECK_THROWS_AS(bad.validate(m), PreconditionError);
}

TEST_CASE("single step reduces to the classic wave stencil") {
  Problem p = desk::problem(10, 1.0, 0.5, 0.0);
  LeapfrogStepper stepper(p);
  std::vector<double> prev(11, 0.0), curr(11, 0.0), f(11, 0.0), next(11, 0.0);
  curr[5] = 1.0;
  prev[5] = 0.25;
  stepper.step(prev, curr, {}, f, next);
  const double r = p.time.dt * p.time.dt / (0.1 * 0.1);
  CHECK(next[5] == doctest::Approx(2.0 - 0.25 - 2.0 * r).epsilon(1e-14));
  CHECK(next[4] == doctest::Approx(r).epsilon(1e-14));
  CHECK(next[6] == doctest::Approx(r).epsilon(1e-14));
  CHECK(next[3] == 0.0);

  std::fill(curr.begin(), curr.end(), 0.0);
  std::fill(prev.begin(), prev.end(), 0.0);
  stepper.step(prev, curr, {}, f, next);
  for (double v : next) CHECK(v == 0.0);
}

TEST_CASE("damping term on a linear ramp equals -dt^2 q times the exact Caputo value") {
  Problem p = desk::problem(10, 1.0, 0.5, 2.0);
  const double dt = p.time.dt;
  LeapfrogStepper stepper(p);
  const std::size_t n = p.node_count();
  // u(t) = t at one node; ramp increments are dt.
  const std::size_t level = 6;
  CaputoOperator op(p.coeffs.alpha, p.coeffs.alpha1, dt, p.time.steps);
  Field2D inc(level + 1, n);
  for (std::size_t m = 1; m <= level; ++m) inc(m, 4) = dt;
  std::vector<double> c(n);
  op.apply(inc, level, c);
  CHECK(c[4] == doctest::Approx(caputo_monomial_reference(1, 0.5, level * dt)).epsilon(1e-12));

  std::vector<double> zero(n, 0.0), with(n), without(n);
  stepper.step(zero, zero, c, zero, with);
  stepper.step(zero, zero, {}, zero, without);
  CHECK(with[4] - without[4] ==
        doctest::Approx(-dt * dt * 2.0 * caputo_monomial_reference(1, 0.5, level * dt)).epsilon(1e-12));
}

TEST_CASE("standing wave benchmark") {
  Problem p = desk::problem(200, 3.0);
  p.u0 = desk::sine_mode(p.mesh);
  const FieldHistory h = solve_forward(p);
  const double err = desk::relative_error(h, [](double x, double t) { return std::sin(pi * x) * std::cos(pi * t); });
  CHECK(err <= 5e-3);
  for (std::size_t l = 0; l < h.levels(); ++l) {
    CHECK(h.u(l, 0) == 0.0);
    CHECK(h.u(l, 200) == 0.0);
  }
  for (std::size_t i = 1; i + 1 < h.node_count(); ++i) CHECK(h.u(0, i) == p.u0[i]);

  // At t = 0.5 the exact solution vanishes.
  Problem half = desk::problem(200, 0.5);
  half.u0 = desk::sine_mode(half.mesh);
  const FieldHistory hh = solve_forward(half);
  double peak = 0.0;
  for (double v : hh.u.row(hh.levels() - 1)) peak = std::max(peak, std::abs(v));
  CHECK(peak <= 5e-3);
}

TEST_CASE("second-order convergence of the undamped solver") {
  double prev = 0.0;
  for (int n : {50, 100, 200}) {
    Problem p = desk::problem(n, 1.0);
    p.u0 = desk::sine_mode(p.mesh);
    const double err =
        desk::relative_error(solve_forward(p), [](double x, double t) { return std::sin(pi * x) * std::cos(pi * t); });
    if (n > 50) CHECK(std::log2(prev / err) >= 1.8);
    prev = err;
  }
}

TEST_CASE("undamped closed forms") {
  Problem p = desk::problem(200, 2.0);
  p.u1 = desk::sine_mode(p.mesh);
  const double e1 = desk::relative_error(solve_undamped(p),
                                         [](double x, double t) { return std::sin(pi * x) * std::sin(pi * t) / pi; });
  CHECK(e1 <= 5e-3);

  Problem d = desk::problem(200, 2.0);
  d.source = GriddedSource{sample_space_time(d.mesh, d.time, [](double x, double) { return std::sin(pi * x); })};
  const double e2 = desk::relative_error(
      solve_undamped(d), [](double x, double t) { return std::sin(pi * x) * (1.0 - std::cos(pi * t)) / (pi * pi); });
  CHECK(e2 <= 5e-3);

  const FieldHistory zero = solve_forward(desk::problem(40, 1.0));
  for (double v : zero.u.data()) CHECK(v == 0.0);
}

TEST_CASE("q = 0 takes the same path in forward and undamped solves") {
  Problem p = desk::problem(60, 1.0, 0.4, 0.0);
  p.u0 = desk::sine_mode(p.mesh);
  p.u1 = sample_space(p.mesh, [](double x) { return x * (1.0 - x); });
  CHECK(solve_forward(p).u == solve_undamped(p).u);
}

TEST_CASE("solution map is linear") {
  Problem a = desk::problem(50, 1.0, 0.6, 1.0);
  a.u0 = desk::sine_mode(a.mesh);
  Problem b = desk::problem(50, 1.0, 0.6, 1.0);
  b.u1 = sample_space(b.mesh, [](double x) { return std::cos(3.0 * x); });
  b.source = GriddedSource{sample_space_time(b.mesh, b.time, [](double x, double t) { return x * t; })};
  Problem sum = b;
  for (std::size_t i = 0; i < sum.u0.size(); ++i) sum.u0[i] = 2.0 * a.u0[i];
  const Field2D ua = solve_forward(a).u, ub = solve_forward(b).u, us = solve_forward(sum).u;
  for (std::size_t k = 0; k < us.data().size(); ++k) {
    CHECK(us.data()[k] == doctest::Approx(2.0 * ua.data()[k] + ub.data()[k]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("preconditions and instability") {
  Problem p = desk::problem(20, 1.0);
  p.u0.front() = 1.0;
  CHECK_THROWS_AS(solve_forward(p), PreconditionError);

  Problem fast = desk::problem(20, 1.0);
  fast.time = make_time_grid(1.0, 2.0 * fast.mesh.spacing());
  CHECK_THROWS_AS(solve_forward(fast), PreconditionError);

  Problem factored = desk::problem(20, 1.0);
  FactoredSource fs{Field2D(factored.time.levels(), factored.node_count(), 0.5), std::vector<double>(21, 1.0), 1.0};
  factored.source = fs;
  CHECK_THROWS_AS(solve_forward(factored), PreconditionError);

  Problem big = desk::problem(20, 1.0);
  LeapfrogStepper stepper(big);
  std::vector<double> prev(21, 0.0), curr(21, 0.0), f(21, 0.0), next(21);
  curr[3] = 1e101;
  CHECK_THROWS_AS(stepper.step(prev, curr, {}, f, next), InstabilityError);
}

TEST_CASE("Picard iteration reproduces the stepper") {
  Problem p0 = desk::problem(40, 1.0, 0.5, 0.0);
  p0.u0 = desk::sine_mode(p0.mesh);
  const PicardResult r0 = solve_picard(p0, 1e-12, 5);
  CHECK(r0.iterations == 1);
  CHECK(r0.history.u == solve_undamped(p0).u);

  Problem p = desk::problem(40, 1.0, 0.5, 1.0);
  p.u0 = desk::sine_mode(p.mesh);
  const PicardResult r = solve_picard(p, 1e-12, 80);
  const FieldHistory ref = solve_forward(p);
  double gap = 0.0;
  for (std::size_t k = 0; k < ref.u.data().size(); ++k) {
    gap = std::max(gap, std::abs(ref.u.data()[k] - r.history.u.data()[k]));
  }
  CHECK(gap <= 1e-10);
  CHECK(r.residuals.back() <= 1e-12);

  CHECK_THROWS_AS(solve_picard(p, 1e-14, 2), ConvergenceError);
}

TEST_CASE("derivatives of the history") {
  Problem p = desk::problem(100, 1.0);
  p.u0 = desk::sine_mode(p.mesh);
  const FieldHistory h = solve_forward(p);
  const Field2D ux = h.space_derivative();
  CHECK(ux(0, 0) == doctest::Approx(pi).epsilon(1e-3));
  const Field2D ut = h.time_derivative();
  CHECK(std::abs(ut(0, 50)) <= 1e-3);

  std::vector<double> v{0.0, 1.0, 4.0, 9.0, 16.0}, d(5);
  differentiate(v, 1.0, d);
  for (int i = 0; i < 5; ++i) CHECK(d[static_cast<std::size_t>(i)] == doctest::Approx(2.0 * i));
}

TEST_CASE("spatial operator transpose") {
  const Mesh m = Mesh::interval(0.0, 2.0, 12);
  Coefficients k = uniform_coefficients(m, 0.5, 1.0);
  k.a = sample_space(m, [](double x) { return 1.0 + 0.3 * x; });
  k.b = sample_space(m, [](double x) { return std::sin(x); });
  k.c = sample_space(m, [](double x) { return x * x; });
  k = with_tight_bounds(k, m);
  const SpatialOperator op(m, k);
  std::vector<double> u(13), w(13), Lu(13), Ltw(13);
  for (int i = 0; i < 13; ++i) {
    u[static_cast<std::size_t>(i)] = std::cos(1.3 * i);
    w[static_cast<std::size_t>(i)] = std::sin(0.7 * i + 0.2);
  }
  op.apply(u, Lu);
  op.apply_transpose(w, Ltw);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < 13; ++i) {
    lhs += Lu[i] * w[i];
    rhs += u[i] * Ltw[i];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}
