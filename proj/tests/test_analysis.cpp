#include <cmath>

#include "desk.hpp"
#include "doctest.h"
#include "fracwave/analysis.hpp"
#include "fracwave/error.hpp"
#include "fracwave/rng.hpp"

using namespace fracwave;
using desk::pi;

namespace {

FieldHistory sampled(int n_cells, double T, double dt, double t0, double (*fn)(double, double)) {
  FieldHistory h;
  h.mesh = Mesh::interval(0.0, 1.0, n_cells);
  h.dt = dt;
  h.t0 = t0;
  const auto levels = static_cast<std::size_t>(std::llround((T - t0) / dt)) + 1;
  h.u = Field2D(levels, h.mesh.node_count());
  for (std::size_t l = 0; l < levels; ++l) {
    for (std::size_t i = 0; i < h.mesh.node_count(); ++i) h.u(l, i) = fn(h.mesh.nodes()[i], h.time(l));
  }
  return h;
}

CarlemanParams unit_params(double T, double lambda, std::vector<double> s_grid) {
  const Mesh m = Mesh::interval(0.0, 1.0, 4);
  return make_carleman_params(observation_geometry(m, {-1.0, 0.0}, T), lambda, std::move(s_grid));
}

}  // namespace

TEST_CASE("energy of the standing wave") {
  Problem p = desk::problem(200, 3.0);
  p.u0 = desk::sine_mode(p.mesh);
  const FieldHistory h = solve_forward(p);
  CHECK(energy(h, p.coeffs, 0) == doctest::Approx(pi * pi / 2.0).epsilon(1e-3 / 4.9));
  const auto E = energy_series(h, p.coeffs);
  double drift = 0.0;
  for (double e : E) drift = std::max(drift, std::abs(e - E[0]));
  CHECK(drift <= 1e-3);
  CHECK_THROWS_AS(energy(h, p.coeffs, h.levels()), PreconditionError);

  const InequalityReport r = check_energy_bounds(h, p.coeffs, Field2D{});
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].lemma == "en1");
  CHECK(r.rows[0].fitted_C == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::isfinite(r.rows[1].fitted_C));
  CHECK(r.pass);

  const EnergyEquivalence eq = check_energy_equivalence(h, p.coeffs);
  CHECK(eq.holds);
}

TEST_CASE("energy bounds on the null solution are vacuous") {
  const Problem p = desk::problem(20, 1.0);
  const FieldHistory h = solve_forward(p);
  CHECK(energy(h, p.coeffs, 3) == 0.0);
  const InequalityReport r = check_energy_bounds(h, p.coeffs, p.source_values());
  for (const auto& row : r.rows) CHECK(row.fitted_C == 0.0);
  CHECK(r.pass);
}

TEST_CASE("Carleman weight") {
  const CarlemanParams p = unit_params(3.0, 0.5, {1.0});
  const CarlemanWeight w = carleman_weight({1.0, 0.0}, 0.0, p);
  CHECK(w.psi == doctest::Approx(4.0));
  CHECK(w.phi == doctest::Approx(std::exp(2.0)));
  const double t = std::sqrt(4.0 / p.beta);
  CHECK(carleman_weight({1.0, 0.0}, t, p).psi == doctest::Approx(0.0).epsilon(1e-14).scale(1.0));
  CHECK(carleman_weight({1.0, 0.0}, t, p).phi == doctest::Approx(1.0));
  for (double x : {0.0, 0.5, 1.0}) {
    double best_t = 0.0;
    double best = -1.0;
    for (int k = -30; k <= 30; ++k) {
      const double phi = carleman_weight({x, 0.0}, 0.1 * k, p).phi;
      if (phi > best) {
        best = phi;
        best_t = 0.1 * k;
      }
    }
    CHECK(best_t == 0.0);
  }
}

TEST_CASE("fractional damping bound") {
  CHECK(frac_damping_constant(3.0) == doctest::Approx(3.38753).epsilon(1e-5));
  CHECK(frac_damping_constant(0.5) == doctest::Approx(1.0 / 0.885603).epsilon(1e-6));

  const Mesh m = Mesh::interval(0.0, 1.0, 40);
  const Coefficients k = uniform_coefficients(m, 0.5, 1.0);
  const CarlemanParams params = unit_params(3.0, 1.0, {1.0});
  const FieldHistory constant = sampled(40, 3.0, 0.01, 0.0, [](double x, double) { return std::sin(pi * x); });
  const InequalityReport vac = check_frac_damping_bound(constant, k, params, 1.0);
  CHECK(vac.rows[0].lhs == 0.0);
  CHECK(vac.pass);

  const FieldHistory smooth =
      sampled(40, 3.0, 0.01, 0.0, [](double x, double t) { return std::sin(pi * x) * std::sin(2.0 * t + 0.3); });
  for (double s : {0.0, 1.0, 5.0}) {
    const InequalityReport r = check_frac_damping_bound(smooth, k, params, s);
    CHECK(r.pass);
    CHECK(r.rows[0].fitted_C > 0.0);
  }
}

TEST_CASE("symmetric extension") {
  FieldHistory even = sampled(10, 1.0, 0.1, 0.0, [](double x, double t) { return t * t * std::sin(pi * x); });
  even.initial_velocity = std::vector<double>(11, 0.0);
  const FieldHistory e = extend_time_symmetric(even, Parity::Even);
  CHECK(e.levels() == 21);
  CHECK(e.t0 == doctest::Approx(-1.0));
  for (std::size_t l = 0; l < e.levels(); ++l) {
    const double t = e.time(l);
    CHECK(e.u(l, 5) == doctest::Approx(t * t).epsilon(1e-12));
  }
  const FieldHistory back = restrict_to_nonnegative_time(e);
  CHECK(back.u == even.u);

  const FieldHistory odd = sampled(10, 1.0, 0.1, 0.0, [](double x, double t) { return std::sin(pi * t) * x * (1 - x); });
  const FieldHistory o = extend_time_symmetric(odd, Parity::Odd);
  for (std::size_t l = 0; l < o.levels(); ++l) {
    CHECK(o.u(l, 3) == doctest::Approx(std::sin(pi * o.time(l)) * 0.3 * 0.7).epsilon(1e-12).scale(1.0));
  }
  CHECK(restrict_to_nonnegative_time(o).u == odd.u);

  const FieldHistory bad = sampled(10, 1.0, 0.1, 0.0, [](double x, double) { return std::sin(pi * x); });
  CHECK_THROWS_AS(extend_time_symmetric(bad, Parity::Odd), PreconditionError);
  const FieldHistory moving = sampled(10, 1.0, 0.1, 0.0, [](double x, double t) { return t * std::sin(pi * x); });
  CHECK_THROWS_AS(extend_time_symmetric(moving, Parity::Even), PreconditionError);
}

TEST_CASE("Carleman estimate on a synthetic function") {
  const double T = 3.0;
  const Mesh m = Mesh::interval(0.0, 1.0, 80);
  const Coefficients k = uniform_coefficients(m, 0.5, 0.0);
  const CarlemanParams params = unit_params(T, 1.0, {1.0, 2.0, 4.0, 8.0});

  const FieldHistory zero = sampled(80, T, 0.01, -T, [](double, double) { return 0.0; });
  const InequalityReport z = check_carleman(zero, k, params);
  for (const auto& row : z.rows) {
    CHECK(row.lhs == 0.0);
    CHECK(row.rhs_total == 0.0);
  }

  const FieldHistory u = sampled(80, T, 0.01, -T, [](double x, double t) { return std::sin(pi * x) * std::sin(pi * t / 3.0); });
  const InequalityReport r = check_carleman(u, k, params);
  REQUIRE(r.rows.size() == 4);
  for (const auto& row : r.rows) CHECK(std::isfinite(row.fitted_C));
  CHECK(r.rows[3].fitted_C <= r.rows[2].fitted_C);
  CHECK(r.pass);

  // Homogeneity: scaling u leaves the fitted constants unchanged.
  FieldHistory scaled = u;
  for (double& v : scaled.u.data()) v *= 7.5;
  const InequalityReport rs = check_carleman(scaled, k, params);
  for (std::size_t j = 0; j < r.rows.size(); ++j) {
    CHECK(rs.rows[j].fitted_C == doctest::Approx(r.rows[j].fitted_C).epsilon(1e-12));
  }

  const FieldHistory on_half = sampled(80, T, 0.01, 0.0, [](double, double) { return 0.0; });
  CHECK_THROWS_AS(check_carleman(on_half, k, params), PreconditionError);
}

TEST_CASE("damped Carleman check on solver output") {
  Problem p = desk::problem(80, 3.0, 0.5, 1.0);
  p.u0 = desk::sine_mode(p.mesh);
  const FieldHistory h = solve_forward(p);
  const CarlemanParams params = unit_params(3.0, 1.0, {1.0, 2.0, 4.0, 8.0});
  const InequalityReport r = check_carleman_damped(h, p.coeffs, params, p.source_values());
  for (const auto& row : r.rows) CHECK(std::isfinite(row.fitted_C));
  CHECK(r.pass);
}

TEST_CASE("initial-trace estimate for v = t sin(pi x)") {
  const double T = 3.0;
  FieldHistory v = sampled(400, T, 0.0025, 0.0, [](double x, double t) { return t * std::sin(pi * x); });
  const CarlemanParams params = unit_params(T, 0.0, {1.0});
  const InequalityReport r = check_initial_trace_estimate(v, params, 0.0);
  const InequalityRow& row = r.rows[0];
  CHECK(row.lhs == doctest::Approx(0.5).epsilon(1e-3));
  // box v = pi^2 t sin(pi x), so its squared norm is pi^4 T^3 / 6.
  CHECK(row.rhs_terms[0] == doctest::Approx(std::pow(pi, 4) * T * T * T / 6.0).epsilon(1e-2));
  CHECK(row.rhs_terms[1] == 0.0);
  CHECK(row.rhs_terms[2] == doctest::Approx((pi * pi * T * T + 1.0) / 2.0).epsilon(1e-3));
  CHECK(r.pass);

  const FieldHistory zero = sampled(20, T, 0.05, 0.0, [](double, double) { return 0.0; });
  const InequalityReport z = check_initial_trace_estimate(zero, params, 2.0);
  CHECK(z.rows[0].lhs == 0.0);
  CHECK(z.rows[0].fitted_C == 0.0);
}

TEST_CASE("quadrature helpers") {
  std::vector<double> v{1.0, 1.0, 1.0, 1.0, 1.0};
  CHECK(trapezoid(v, 0.25) == doctest::Approx(1.0));
  Field2D ones(11, 5, 1.0);
  CHECK(space_time_norm_sq(ones, 0.25, 0.1) == doctest::Approx(1.0));
}
