#include "fracwave/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>

#include "fracwave/caputo.hpp"
#include "fracwave/error.hpp"
#include "fracwave/rng.hpp"

namespace fracwave {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void require_matching(const ObservationSeries& obs, const ObservationTemplate& tmpl, ObservationKind kind) {
  require(obs.kind == kind, "observation kind does not match the inverse problem (" + to_string(kind) + " expected)");
  require(obs.values.rows() == tmpl.problem.time.levels() && obs.values.cols() == tmpl.patch.faces.size(),
          "observation grid does not match the template");
}

/// History seeds of the trace functional sum_{l,p} y(l,p) * d_nu u(l, face_p).
Field2D trace_seeds(const Field2D& y, const ObservationTemplate& tmpl) {
  const Problem& p = tmpl.problem;
  Field2D seeds(p.time.levels(), p.node_count());
  const double h = p.mesh.spacing();
  for (std::size_t k = 0; k < tmpl.patch.faces.size(); ++k) {
    const auto stencil = normal_derivative_stencil(p.node_count(), tmpl.patch.faces[k], h);
    for (std::size_t l = 0; l < y.rows(); ++l) {
      for (const auto& [idx, w] : stencil) seeds(l, idx) += w * y(l, k);
    }
  }
  return seeds;
}

/// Column-wise transpose of the time-differentiation stencil.
Field2D time_differentiate_transpose(const Field2D& y, double dt) {
  Field2D out(y.rows(), y.cols());
  std::vector<double> col(y.rows()), res(y.rows());
  for (std::size_t k = 0; k < y.cols(); ++k) {
    for (std::size_t l = 0; l < y.rows(); ++l) col[l] = y(l, k);
    differentiate_transpose(col, dt, res);
    for (std::size_t l = 0; l < y.rows(); ++l) out(l, k) = res[l];
  }
  return out;
}

Problem zero_data_problem(const ObservationTemplate& tmpl) {
  Problem p = tmpl.problem;
  p.u0.assign(p.node_count(), 0.0);
  p.u1.assign(p.node_count(), 0.0);
  p.source = std::monostate{};
  return p;
}

using LinearMap = std::function<std::vector<double>(const std::vector<double>&)>;

/// CG on (A^T A + gamma I) x = A^T d in CGLS form.
ReconstructionResult solve_normal_equations(const LinearMap& forward, const LinearMap& adjoint,
                                            const std::vector<double>& data, std::size_t unknowns,
                                            const Regularization& reg, std::optional<double> noise_norm) {
  require(reg.cap >= 1, "iteration cap must be at least 1");
  require(reg.tau > 1.0, "discrepancy factor tau must exceed 1");
  ReconstructionResult res;
  res.estimate.assign(unknowns, 0.0);
  std::vector<double> r = data;
  std::vector<double> s = adjoint(r);
  double sup = 0.0;
  for (double v : s) sup = std::max(sup, std::abs(v));
  const double gamma = reg.tikhonov_weight.value_or(1e-8 * sup);
  require(gamma >= 0.0, "Tikhonov weight must be nonnegative");
  res.regularization = gamma;
  res.discrepancy = norm2(r);
  res.residual_history.push_back(res.discrepancy);
  if (sup == 0.0) {
    res.converged = true;
    res.stopping_rule = "zero-data";
    return res;
  }
  const double target = noise_norm ? reg.tau * *noise_norm : -1.0;
  if (res.discrepancy <= target) {
    res.converged = true;
    res.stopping_rule = "discrepancy";
    return res;
  }

  std::vector<double> p = s;
  double s_sq = dot(s, s);
  const double s0 = std::sqrt(s_sq);
  auto& x = res.estimate;
  for (int it = 1; it <= reg.cap; ++it) {
    const std::vector<double> q = forward(p);
    const double delta = dot(q, q) + gamma * dot(p, p);
    if (delta <= 0.0) break;
    const double alpha = s_sq / delta;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * p[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
    res.iterations = it;
    res.discrepancy = norm2(r);
    res.residual_history.push_back(std::sqrt(res.discrepancy * res.discrepancy + gamma * dot(x, x)));
    if (noise_norm && res.discrepancy <= target) {
      res.converged = true;
      res.stopping_rule = "discrepancy";
      return res;
    }
    s = adjoint(r);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] -= gamma * x[i];
    const double s_new = dot(s, s);
    if (!noise_norm && std::sqrt(s_new) <= reg.rtol * s0) {
      res.converged = true;
      res.stopping_rule = "residual";
      return res;
    }
    const double beta = s_new / s_sq;
    s_sq = s_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = s[i] + beta * p[i];
  }
  res.stopping_rule = "cap";
  return res;
}

std::optional<double> declared_noise(const ObservationSeries& obs) {
  if (obs.noise_level > 0.0) return obs.noise_norm;
  return std::nullopt;
}

}  // namespace

std::string to_string(ObservationKind kind) { return kind == ObservationKind::Trace ? "trace" : "trace_dt"; }

double euclidean_norm(const ObservationSeries& obs) { return norm2(obs.values.data()); }

double l2_norm(const ObservationSeries& obs) {
  const std::size_t L = obs.values.rows();
  double acc = 0.0;
  for (std::size_t k = 0; k < obs.values.cols(); ++k) {
    for (std::size_t l = 0; l < L; ++l) {
      const double w = (l == 0 || l + 1 == L) ? 0.5 : 1.0;
      acc += w * obs.values(l, k) * obs.values(l, k);
    }
  }
  const double dt = obs.times.size() >= 2 ? obs.times[1] - obs.times[0] : 1.0;
  return std::sqrt(acc * dt);
}

ObservationSeries neumann_trace(const FieldHistory& history, const BoundaryPatch& patch) {
  require(history.mesh.dim() == 1, "Neumann traces are computed on 1-D histories");
  require(!patch.faces.empty(), "observation patch is empty");
  const double h = history.mesh.spacing();
  ObservationSeries obs;
  obs.patch = patch;
  obs.kind = ObservationKind::Trace;
  obs.values = Field2D(history.levels(), patch.faces.size());
  obs.times.resize(history.levels());
  for (std::size_t l = 0; l < history.levels(); ++l) obs.times[l] = history.time(l);
  for (std::size_t k = 0; k < patch.faces.size(); ++k) {
    const auto& face = patch.faces[k];
    require(face.node_index < history.node_count() &&
                std::abs(history.mesh.nodes()[face.node_index] - face.points.front().x) <= 1e-12,
            "observation patch does not belong to the mesh boundary");
    for (std::size_t l = 0; l < history.levels(); ++l) obs.values(l, k) = normal_derivative(history.u.row(l), face, h);
  }
  return obs;
}

ObservationSeries time_differentiate(const ObservationSeries& obs) {
  require(obs.kind == ObservationKind::Trace, "only trace series can be time-differentiated");
  require(obs.times.size() >= 2, "time differentiation needs two samples");
  const double dt = obs.times[1] - obs.times[0];
  ObservationSeries out = obs;
  out.kind = ObservationKind::TraceDt;
  std::vector<double> col(obs.values.rows()), d(obs.values.rows());
  for (std::size_t k = 0; k < obs.values.cols(); ++k) {
    for (std::size_t l = 0; l < col.size(); ++l) col[l] = obs.values(l, k);
    differentiate(col, dt, d);
    for (std::size_t l = 0; l < col.size(); ++l) out.values(l, k) = d[l];
  }
  return out;
}

void differentiate_transpose(std::span<const double> y, double step, std::span<double> out) {
  const std::size_t n = y.size();
  require(n >= 2 && out.size() == n, "differentiation needs at least two samples");
  std::fill(out.begin(), out.end(), 0.0);
  if (n == 2) {
    const double s = (y[0] + y[1]) / step;
    out[0] = -s;
    out[1] = s;
    return;
  }
  const double inv2 = 1.0 / (2.0 * step);
  out[0] += -3.0 * inv2 * y[0];
  out[1] += 4.0 * inv2 * y[0];
  out[2] += -inv2 * y[0];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i - 1] -= inv2 * y[i];
    out[i + 1] += inv2 * y[i];
  }
  out[n - 1] += 3.0 * inv2 * y[n - 1];
  out[n - 2] += -4.0 * inv2 * y[n - 1];
  out[n - 3] += inv2 * y[n - 1];
}

FieldHistory time_derivative_history(const FieldHistory& history) {
  FieldHistory v;
  v.mesh = history.mesh;
  v.dt = history.dt;
  v.t0 = history.t0;
  v.u = history.time_derivative();
  return v;
}

AdjointSensitivities adjoint_solve(const Problem& p, const Field2D& seeds) {
  p.validate();
  const std::size_t L = p.time.levels();
  const std::size_t N = p.time.steps;
  const std::size_t n = p.node_count();
  require(seeds.rows() == L && seeds.cols() == n, "adjoint seeds do not match the time grid");

  Field2D g = seeds;
  AdjointSensitivities out;
  out.forcing = Field2D(L, n);
  const SpatialOperator op(p.mesh, p.coeffs);
  const double dt = p.time.dt;
  const double dt2 = dt * dt;
  const bool damped = p.coeffs.has_damping();
  const auto& q = p.coeffs.q;

  std::optional<CaputoOperator> caputo;
  Field2D cbar;
  if (damped) {
    caputo.emplace(p.coeffs.alpha, p.coeffs.alpha1, dt, N);
    cbar = Field2D(L, n);
  }
  std::vector<double> wbar(n), tmp(n), dbar(n);

  // Adjoint of the increment u^m - u^{m-1} collects every later Caputo value.
  auto add_history_adjoint = [&](std::size_t m) {
    std::fill(dbar.begin(), dbar.end(), 0.0);
    for (std::size_t later = m; later < N; ++later) {
      const auto w = caputo->weights(later - m);
      const auto c = cbar.row(later);
      for (std::size_t i = 0; i < n; ++i) dbar[i] += w[i] * c[i];
    }
    auto gm = g.row(m);
    auto gp = g.row(m - 1);
    for (std::size_t i = 0; i < n; ++i) {
      gm[i] += dbar[i];
      gp[i] -= dbar[i];
    }
  };

  auto load_projected = [&](std::size_t level) {
    const auto row = g.row(level);
    std::copy(row.begin(), row.end(), wbar.begin());
    wbar.front() = 0.0;
    wbar.back() = 0.0;
  };

  for (std::size_t s = N - 1; s >= 1; --s) {
    if (damped) add_history_adjoint(s + 1);
    load_projected(s + 1);
    op.apply_transpose(wbar, tmp);
    auto gs = g.row(s);
    auto gprev = g.row(s - 1);
    auto fs = out.forcing.row(s);
    for (std::size_t i = 0; i < n; ++i) {
      gs[i] += 2.0 * wbar[i] + dt2 * tmp[i];
      gprev[i] -= wbar[i];
      fs[i] = dt2 * wbar[i];
    }
    if (damped) {
      auto cs = cbar.row(s);
      for (std::size_t i = 0; i < n; ++i) cs[i] = -dt2 * q[i] * wbar[i];
    }
  }
  if (damped) add_history_adjoint(1);

  load_projected(1);
  op.apply_transpose(wbar, tmp);
  out.u0.resize(n);
  out.u1.resize(n);
  auto f0 = out.forcing.row(0);
  for (std::size_t i = 0; i < n; ++i) {
    out.u0[i] = wbar[i] + 0.5 * dt2 * tmp[i] + g(0, i);
    out.u1[i] = dt * wbar[i];
    f0[i] = 0.5 * dt2 * wbar[i];
  }
  out.u0.front() = 0.0;
  out.u0.back() = 0.0;
  return out;
}

ObservationSeries forward_map_source(std::span<const double> f, const SourceFactor& factor,
                                     const ObservationTemplate& tmpl) {
  require(factor.r0 > 0.0, "source factor needs r0 > 0");
  Problem p = zero_data_problem(tmpl);
  require(f.size() == p.node_count(), "source profile must have one sample per node");
  p.source = FactoredSource{factor.R, std::vector<double>(f.begin(), f.end()), factor.r0};
  return time_differentiate(neumann_trace(solve_forward(p), tmpl.patch));
}

std::vector<double> adjoint_map_source(const ObservationSeries& obs, const SourceFactor& factor,
                                       const ObservationTemplate& tmpl) {
  require_matching(obs, tmpl, ObservationKind::TraceDt);
  const Problem p = zero_data_problem(tmpl);
  require(factor.R.rows() == p.time.levels() && factor.R.cols() == p.node_count(), "source factor has the wrong shape");
  const Field2D ybar = time_differentiate_transpose(obs.values, p.time.dt);
  const AdjointSensitivities adj = adjoint_solve(p, trace_seeds(ybar, tmpl));
  std::vector<double> fbar(p.node_count(), 0.0);
  for (std::size_t l = 0; l < p.time.levels(); ++l) {
    for (std::size_t i = 0; i < fbar.size(); ++i) fbar[i] += factor.R(l, i) * adj.forcing(l, i);
  }
  return fbar;
}

ObservationSeries forward_map_initial(std::span<const double> state, InitialState which,
                                      const ObservationTemplate& tmpl) {
  Problem p = zero_data_problem(tmpl);
  require(state.size() == p.node_count(), "initial state must have one sample per node");
  if (which == InitialState::U0) {
    std::copy(state.begin(), state.end(), p.u0.begin());
    p.u0.front() = 0.0;
    p.u0.back() = 0.0;
  } else {
    std::copy(state.begin(), state.end(), p.u1.begin());
  }
  return neumann_trace(solve_forward(p), tmpl.patch);
}

std::vector<double> adjoint_map_initial(const ObservationSeries& obs, InitialState which,
                                        const ObservationTemplate& tmpl) {
  require_matching(obs, tmpl, ObservationKind::Trace);
  const Problem p = zero_data_problem(tmpl);
  const AdjointSensitivities adj = adjoint_solve(p, trace_seeds(obs.values, tmpl));
  if (which == InitialState::U1) return adj.u1;
  std::vector<double> g = adj.u0;
  g.front() = 0.0;
  g.back() = 0.0;
  return g;
}

ReconstructionResult reconstruct_source(const ObservationSeries& obs, const SourceFactor& factor,
                                        const ObservationTemplate& tmpl, const Regularization& reg,
                                        std::optional<std::vector<double>> truth) {
  require_matching(obs, tmpl, ObservationKind::TraceDt);
  require(factor.r0 > 0.0, "source factor needs r0 > 0");
  for (std::size_t i = 0; i < factor.R.cols(); ++i) {
    require(std::abs(factor.R(0, i)) >= factor.r0 * (1.0 - 1e-12), "source factor violates |R(x,0)| >= r0");
  }
  ObservationSeries shape = obs;
  shape.noise_level = 0.0;
  const LinearMap fwd = [&](const std::vector<double>& f) { return forward_map_source(f, factor, tmpl).values.data(); };
  const LinearMap adj = [&](const std::vector<double>& y) {
    shape.values.data() = y;
    return adjoint_map_source(shape, factor, tmpl);
  };
  ReconstructionResult res =
      solve_normal_equations(fwd, adj, obs.values.data(), tmpl.problem.node_count(), reg, declared_noise(obs));
  if (truth) res.relative_error = relative_l2_error(res.estimate, *truth, tmpl.problem.mesh.spacing());
  return res;
}

ReconstructionResult reconstruct_initial(const ObservationSeries& obs, const ObservationTemplate& tmpl,
                                         InitialState which, const Regularization& reg,
                                         std::optional<std::vector<double>> truth) {
  require_matching(obs, tmpl, ObservationKind::Trace);
  // Remove the response to the known source; the complementary state is zero.
  Problem known = tmpl.problem;
  known.u0.assign(known.node_count(), 0.0);
  known.u1.assign(known.node_count(), 0.0);
  const ObservationSeries baseline = neumann_trace(solve_forward(known), tmpl.patch);
  std::vector<double> data = obs.values.data();
  for (std::size_t k = 0; k < data.size(); ++k) data[k] -= baseline.values.data()[k];

  ObservationSeries shape = obs;
  const LinearMap fwd = [&](const std::vector<double>& x) { return forward_map_initial(x, which, tmpl).values.data(); };
  const LinearMap adj = [&](const std::vector<double>& y) {
    shape.values.data() = y;
    return adjoint_map_initial(shape, which, tmpl);
  };
  ReconstructionResult res =
      solve_normal_equations(fwd, adj, data, tmpl.problem.node_count(), reg, declared_noise(obs));
  if (truth) {
    const double h = tmpl.problem.mesh.spacing();
    res.relative_error = which == InitialState::U0 ? relative_h1_error(res.estimate, *truth, h)
                                                   : relative_l2_error(res.estimate, *truth, h);
  }
  return res;
}

double bk_consistency(const FieldHistory& v, const SourceFactor& factor, std::span<const double> f) {
  require(v.levels() >= 3, "BK identity check needs at least three levels");
  require(f.size() == v.node_count() && factor.R.cols() == v.node_count(), "source profile does not match history");
  const double inv2 = 1.0 / (2.0 * v.dt);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 1; i + 1 < v.node_count(); ++i) {
    const double dtv = (-3.0 * v.u(0, i) + 4.0 * v.u(1, i) - v.u(2, i)) * inv2;
    const double target = factor.R(0, i) * f[i];
    num += (dtv - target) * (dtv - target);
    den += target * target;
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

ObservationSeries add_noise(const ObservationSeries& obs, double level, std::uint64_t seed) {
  require(std::isfinite(level) && level >= 0.0, "noise level must be nonnegative");
  ObservationSeries out = obs;
  out.noise_level = level;
  out.seed = seed;
  out.noise_norm = 0.0;
  const double data_norm = euclidean_norm(obs);
  if (level == 0.0 || data_norm == 0.0) return out;
  CounterRng rng(seed);
  std::vector<double> eta(obs.values.data().size());
  for (double& e : eta) e = rng.normal();
  const double scale = level * data_norm / norm2(eta);
  for (std::size_t k = 0; k < eta.size(); ++k) out.values.data()[k] += scale * eta[k];
  out.noise_norm = level * data_norm;
  return out;
}

double l2_norm(std::span<const double> v, double h) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = (i == 0 || i + 1 == v.size()) ? 0.5 : 1.0;
    acc += w * v[i] * v[i];
  }
  return std::sqrt(acc * h);
}

double relative_l2_error(std::span<const double> estimate, std::span<const double> truth, double h) {
  require(estimate.size() == truth.size(), "estimate and truth differ in size");
  std::vector<double> e(estimate.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = estimate[i] - truth[i];
  const double t = l2_norm(truth, h);
  require(t > 0.0, "relative error needs a nonzero truth");
  return l2_norm(e, h) / t;
}

double relative_h1_error(std::span<const double> estimate, std::span<const double> truth, double h) {
  require(estimate.size() == truth.size() && truth.size() >= 2, "estimate and truth differ in size");
  auto h1_sq = [h](std::span<const double> v) {
    double grad = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) grad += (v[i + 1] - v[i]) * (v[i + 1] - v[i]);
    const double l2 = l2_norm(v, h);
    return l2 * l2 + grad / h;
  };
  std::vector<double> e(estimate.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = estimate[i] - truth[i];
  const double t = h1_sq(truth);
  require(t > 0.0, "relative error needs a nonzero truth");
  return std::sqrt(h1_sq(e) / t);
}

std::vector<double> random_smooth_profile(const Mesh& mesh, std::uint64_t seed, int modes) {
  require(modes >= 1, "profile needs at least one mode");
  CounterRng rng(seed);
  std::vector<double> c(static_cast<std::size_t>(modes));
  for (double& v : c) v = rng.uniform(-1.0, 1.0);
  const double a = mesh.lower().x;
  const double len = mesh.upper().x - a;
  return sample_space(mesh, [&](double x) {
    double acc = 0.0;
    for (int k = 1; k <= modes; ++k) {
      acc += c[static_cast<std::size_t>(k - 1)] * std::sin(k * std::numbers::pi * (x - a) / len) / (k * k);
    }
    return acc;
  });
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "line fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, "line fit needs distinct abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

std::vector<ProbeRow> stability_probe(const ObservationTemplate& tmpl, const SourceFactor& factor,
                                      const ProbeConfig& config) {
  require(config.n_draws >= 1, "probe needs at least one draw");
  require(!config.noise_ladder.empty(), "probe needs a noise ladder");
  ObservationTemplate clean = tmpl;
  clean.problem.u0.assign(clean.problem.node_count(), 0.0);
  clean.problem.u1.assign(clean.problem.node_count(), 0.0);
  clean.problem.source = std::monostate{};
  const double h = clean.problem.mesh.spacing();

  std::vector<ProbeRow> rows;
  for (int d = 0; d < config.n_draws; ++d) {
    const std::uint64_t draw_seed = derive_seed(config.seed, static_cast<std::uint64_t>(d));
    const std::vector<double> truth = random_smooth_profile(clean.problem.mesh, draw_seed);
    const ObservationSeries obs = config.target == ProbeTarget::Source
                                      ? forward_map_source(truth, factor, clean)
                                      : forward_map_initial(truth, InitialState::U1, clean);
    const double truth_norm = l2_norm(truth, h);
    const double obs_norm = l2_norm(obs);
    for (std::size_t j = 0; j < config.noise_ladder.size(); ++j) {
      const double level = config.noise_ladder[j];
      const ObservationSeries noisy = add_noise(obs, level, derive_seed(draw_seed, j + 1));
      const ReconstructionResult rec = config.target == ProbeTarget::Source
                                           ? reconstruct_source(noisy, factor, clean, config.reg, truth)
                                           : reconstruct_initial(noisy, clean, InitialState::U1, config.reg, truth);
      rows.push_back({d, level, truth_norm, obs_norm, *rec.relative_error,
                      obs_norm > 0.0 ? truth_norm / obs_norm : std::numeric_limits<double>::infinity()});
    }
  }
  return rows;
}

}  // namespace fracwave
