#include <cmath>

#include "desk.hpp"
#include "doctest.h"
#include "fracwave/error.hpp"
#include "fracwave/inverse.hpp"
#include "fracwave/rng.hpp"

using namespace fracwave;
using desk::pi;

namespace {

ObservationTemplate make_template(int n_cells, double T, double q, double alpha = 0.5) {
  ObservationTemplate t;
  t.problem = desk::problem(n_cells, T, alpha, q);
  t.patch = gamma0_from_x0(t.problem.mesh, {-1.0, 0.0});
  return t;
}

SourceFactor unit_factor(const Problem& p) { return {Field2D(p.time.levels(), p.node_count(), 1.0), 1.0}; }

SourceFactor varying_factor(const Problem& p) {
  return {sample_space_time(p.mesh, p.time, [](double x, double t) { return 1.0 + 0.5 * x + std::sin(2.0 * t); }),
          0.5};
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("Neumann traces of the standing wave") {
  Problem p = desk::problem(200, 1.0);
  p.u0 = desk::sine_mode(p.mesh);
  const FieldHistory h = solve_forward(p);
  const ObservationSeries right = neumann_trace(h, single_face(p.mesh, Side::Right));
  CHECK(right.values(0, 0) == doctest::Approx(-pi).epsilon(2e-3 / pi));
  const ObservationSeries left = neumann_trace(h, single_face(p.mesh, Side::Left));
  CHECK(left.values(0, 0) == doctest::Approx(-pi).epsilon(2e-3 / pi));
  for (std::size_t l = 0; l < h.levels(); l += 37) {
    CHECK(std::abs(right.values(l, 0) + pi * std::cos(pi * h.time(l))) <= 1e-2);
  }
  const ObservationSeries zero = neumann_trace(solve_forward(desk::problem(20, 1.0)), single_face(p.mesh, Side::Left));
  for (double v : zero.values.data()) CHECK(v == 0.0);

  const Mesh other = Mesh::interval(0.0, 2.0, 200);
  CHECK_THROWS_AS(neumann_trace(h, single_face(other, Side::Right)), PreconditionError);
}

TEST_CASE("source map against the Duhamel closed form") {
  const ObservationTemplate t = make_template(200, 1.0, 0.0);
  const auto f = desk::sine_mode(t.problem.mesh);
  const ObservationSeries obs = forward_map_source(f, unit_factor(t.problem), t);
  CHECK(obs.kind == ObservationKind::TraceDt);
  double worst = 0.0;
  for (std::size_t l = 0; l < obs.times.size(); ++l) {
    worst = std::max(worst, std::abs(obs.values(l, 0) + std::sin(pi * obs.times[l])));
  }
  CHECK(worst <= 1e-2);

  const std::vector<double> zero(f.size(), 0.0);
  for (double v : forward_map_source(zero, unit_factor(t.problem), t).values.data()) CHECK(v == 0.0);
}

TEST_CASE("forward maps are linear") {
  const ObservationTemplate t = make_template(30, 1.0, 0.8);
  const SourceFactor R = varying_factor(t.problem);
  const auto f = random_vector(t.problem.node_count(), 3);
  const auto g = random_vector(t.problem.node_count(), 4);
  std::vector<double> comb(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) comb[i] = 2.0 * f[i] - 0.5 * g[i];
  const auto Af = forward_map_source(f, R, t).values.data();
  const auto Ag = forward_map_source(g, R, t).values.data();
  const auto Ac = forward_map_source(comb, R, t).values.data();
  double scale = 0.0;
  for (double v : Ac) scale = std::max(scale, std::abs(v));
  for (std::size_t k = 0; k < Ac.size(); ++k) CHECK(std::abs(Ac[k] - (2.0 * Af[k] - 0.5 * Ag[k])) <= 1e-12 * scale);
}

TEST_CASE("differentiation transpose") {
  for (std::size_t n : {2u, 3u, 7u}) {
    const auto v = random_vector(n, n);
    const auto y = random_vector(n, 100 + n);
    std::vector<double> dv(n), dty(n);
    differentiate(v, 0.3, dv);
    differentiate_transpose(y, 0.3, dty);
    CHECK(dot(dv, y) == doctest::Approx(dot(v, dty)).epsilon(1e-13));
  }
}

TEST_CASE("adjoint identities") {
  for (int n_cells : {20, 41}) {
    const ObservationTemplate t = make_template(n_cells, 1.5, 0.7, 0.6);
    const SourceFactor R = varying_factor(t.problem);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto f = random_vector(t.problem.node_count(), 10 + seed);
      const ObservationSeries Af = forward_map_source(f, R, t);
      ObservationSeries g = Af;
      g.values.data() = random_vector(Af.values.data().size(), 20 + seed);
      const auto Atg = adjoint_map_source(g, R, t);
      const double gap = std::abs(dot(Af.values.data(), g.values.data()) - dot(f, Atg));
      CHECK(gap / (euclidean_norm(Af) * euclidean_norm(g)) <= 1e-10);

      for (InitialState which : {InitialState::U0, InitialState::U1}) {
        auto x = random_vector(t.problem.node_count(), 30 + seed);
        x.front() = 0.0;
        x.back() = 0.0;
        const ObservationSeries Ax = forward_map_initial(x, which, t);
        ObservationSeries h = Ax;
        h.values.data() = random_vector(Ax.values.data().size(), 40 + seed);
        const auto Ath = adjoint_map_initial(h, which, t);
        const double gap2 = std::abs(dot(Ax.values.data(), h.values.data()) - dot(x, Ath));
        CHECK(gap2 / (euclidean_norm(Ax) * euclidean_norm(h)) <= 1e-10);
      }
    }
    ObservationSeries zero = forward_map_source(std::vector<double>(t.problem.node_count(), 0.0), R, t);
    for (double v : adjoint_map_source(zero, R, t)) CHECK(v == 0.0);
  }
}

TEST_CASE("full adjoint sweep matches the forward solve in every input") {
  Problem p = desk::problem(15, 1.0, 0.4, 1.2);
  p.u0 = random_vector(p.node_count(), 1);
  p.u0.front() = p.u0.back() = 0.0;
  p.u1 = random_vector(p.node_count(), 2);
  Field2D F(p.time.levels(), p.node_count());
  F.data() = random_vector(F.data().size(), 3);
  p.source = GriddedSource{F};
  Field2D seeds(p.time.levels(), p.node_count());
  seeds.data() = random_vector(seeds.data().size(), 4);
  const double lhs = dot(solve_forward(p).u.data(), seeds.data());
  const AdjointSensitivities adj = adjoint_solve(p, seeds);
  const double rhs = dot(p.u0, adj.u0) + dot(p.u1, adj.u1) + dot(F.data(), adj.forcing.data());
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
}

TEST_CASE("reconstructions from small problems") {
  const ObservationTemplate t = make_template(40, 3.0, 0.5);
  const SourceFactor R = unit_factor(t.problem);
  const auto truth = desk::sine_mode(t.problem.mesh);
  const ObservationSeries obs = forward_map_source(truth, R, t);
  const ReconstructionResult rec = reconstruct_source(obs, R, t, Regularization{}, truth);
  REQUIRE(rec.relative_error);
  CHECK(*rec.relative_error <= 5e-2);
  CHECK(rec.iterations <= 400);
  for (std::size_t k = 1; k < rec.residual_history.size(); ++k) {
    CHECK(rec.residual_history[k] <= rec.residual_history[k - 1] * (1.0 + 1e-12));
  }

  ObservationSeries zero = obs;
  std::fill(zero.values.data().begin(), zero.values.data().end(), 0.0);
  const ReconstructionResult z = reconstruct_source(zero, R, t, Regularization{});
  for (double v : z.estimate) CHECK(v == 0.0);
  CHECK(z.stopping_rule == "zero-data");

  ObservationTemplate it = t;
  const auto u1 = desk::sine_mode(t.problem.mesh);
  Problem gen = t.problem;
  gen.u1 = u1;
  const ObservationSeries trace = neumann_trace(solve_forward(gen), t.patch);
  const ReconstructionResult r1 = reconstruct_initial(trace, it, InitialState::U1, Regularization{}, u1);
  CHECK(*r1.relative_error <= 1e-1);

  const ObservationSeries noisy = add_noise(obs, 0.02, 7);
  const ReconstructionResult rn = reconstruct_source(noisy, R, t, Regularization{}, truth);
  CHECK(rn.stopping_rule == "discrepancy");
  CHECK(rn.discrepancy <= 1.1 * noisy.noise_norm);

  ObservationSeries wrong_kind = trace;
  CHECK_THROWS_AS(reconstruct_source(wrong_kind, R, t, Regularization{}), PreconditionError);
}

TEST_CASE("noise model") {
  const ObservationTemplate t = make_template(20, 1.0, 0.0);
  const ObservationSeries obs = forward_map_source(desk::sine_mode(t.problem.mesh), unit_factor(t.problem), t);
  CHECK(add_noise(obs, 0.0, 5).values == obs.values);
  const ObservationSeries a = add_noise(obs, 0.02, 11);
  const ObservationSeries b = add_noise(obs, 0.02, 11);
  CHECK(a.values == b.values);
  CHECK(a.seed == 11);
  CHECK(a.noise_level == 0.02);
  double pert = 0.0;
  for (std::size_t k = 0; k < obs.values.data().size(); ++k) {
    const double d = a.values.data()[k] - obs.values.data()[k];
    pert += d * d;
  }
  CHECK(std::abs(std::sqrt(pert) / euclidean_norm(obs) - 0.02) <= 1e-12);
  CHECK(add_noise(obs, 0.02, 12).values != a.values);
  CHECK_THROWS_AS(add_noise(obs, -0.1, 1), PreconditionError);
}

TEST_CASE("BK identity") {
  const double T = 1.0;
  double prev = 0.0;
  for (int n : {50, 100, 200}) {
    Problem p = desk::problem(n, T, 0.5, 0.5);
    const SourceFactor R = varying_factor(p);
    const auto f = desk::sine_mode(p.mesh);
    p.source = FactoredSource{R.R, f, R.r0};
    const FieldHistory v = time_derivative_history(solve_forward(p));
    const double gap = bk_consistency(v, R, f);
    if (n == 200) CHECK(gap <= 1e-2);
    if (n > 50) CHECK(gap < prev);
    prev = gap;
  }
  Problem p = desk::problem(20, T);
  const SourceFactor R = unit_factor(p);
  const std::vector<double> zero(p.node_count(), 0.0);
  CHECK(bk_consistency(time_derivative_history(solve_forward(p)), R, zero) == 0.0);
}

TEST_CASE("random profiles and line fits") {
  const Mesh m = Mesh::interval(0.0, 1.0, 64);
  const auto a = random_smooth_profile(m, 42);
  CHECK(a == random_smooth_profile(m, 42));
  CHECK(a != random_smooth_profile(m, 43));
  CHECK(std::abs(a.front()) <= 1e-15);
  CHECK(std::abs(a.back()) <= 1e-14);

  const std::vector<double> x{1.0, 2.0, 4.0};
  const std::vector<double> y{0.5, 1.0, 2.0};
  const LinearFit fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(0.5));
  CHECK(fit.intercept == doctest::Approx(0.0).scale(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
}

TEST_CASE("stability probe table") {
  const ObservationTemplate t = make_template(30, 3.0, 0.5);
  ProbeConfig cfg;
  cfg.n_draws = 2;
  cfg.noise_ladder = {0.0, 0.02};
  cfg.seed = 9;
  const auto rows = stability_probe(t, unit_factor(t.problem), cfg);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.ratio));
    CHECK(r.rec_error >= 0.0);
  }
  CHECK(rows[0].truth_norm == rows[1].truth_norm);
  const auto again = stability_probe(t, unit_factor(t.problem), cfg);
  CHECK(again[3].rec_error == rows[3].rec_error);
}
