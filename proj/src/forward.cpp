#include "fracwave/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracwave/caputo.hpp"
#include "fracwave/error.hpp"

namespace fracwave {

namespace {

constexpr double kBlowUp = 1e100;

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double sup_gradient(std::span<const double> v, double h) {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) m = std::max(m, std::abs(v[i + 1] - v[i]) / h);
  return m;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

bool Coefficients::has_damping() const {
  return std::any_of(q.begin(), q.end(), [](double v) { return v != 0.0; });
}

double a_priori_norm(const Coefficients& k, const Mesh& mesh) {
  const double h = mesh.spacing();
  return sup_norm(k.b) + sup_norm(k.c) + sup_norm(k.alpha) + sup_gradient(k.alpha, h) + sup_norm(k.q) +
         sup_gradient(k.q, h);
}

void Coefficients::validate(const Mesh& mesh) const {
  const std::size_t n = mesh.node_count();
  require(alpha.size() == n && q.size() == n && b.size() == n && c.size() == n && rho.size() == n &&
              a.size() == n,
          "coefficient arrays must have one sample per mesh node");
  for (const auto* v : {&alpha, &q, &b, &c, &rho, &a}) require(all_finite(*v), "coefficients must be finite");
  require(alpha1 > 0.0 && alpha1 < 1.0, "alpha1 must lie in (0, 1)");
  for (double x : alpha) require(x > 0.0 && x <= alpha1, "alpha must satisfy 0 < alpha <= alpha1 < 1");
  require(rho0 > 0.0 && rho0 <= rho1, "density bounds must satisfy 0 < rho0 <= rho1");
  for (double x : rho) require(x >= rho0 && x <= rho1, "rho must stay within [rho0, rho1]");
  require(a0 > 0.0, "ellipticity constant a0 must be positive");
  for (double x : a) require(x >= a0, "a must satisfy a >= a0 > 0");
  require(a_priori_norm(*this, mesh) <= M * (1.0 + 1e-12),
          "coefficients exceed the a-priori bound |b| + |c| + |alpha|_W1 + |q|_W1 <= M");
}

Coefficients with_tight_bounds(Coefficients k, const Mesh& mesh) {
  require(!k.alpha.empty() && !k.rho.empty() && !k.a.empty(), "coefficient arrays must not be empty");
  k.alpha1 = *std::max_element(k.alpha.begin(), k.alpha.end());
  k.rho0 = *std::min_element(k.rho.begin(), k.rho.end());
  k.rho1 = *std::max_element(k.rho.begin(), k.rho.end());
  k.a0 = *std::min_element(k.a.begin(), k.a.end());
  k.M = a_priori_norm(k, mesh);
  k.validate(mesh);
  return k;
}

Coefficients uniform_coefficients(const Mesh& mesh, double alpha, double q, double b, double c, double rho,
                                  double a) {
  const std::size_t n = mesh.node_count();
  Coefficients k;
  k.alpha.assign(n, alpha);
  k.q.assign(n, q);
  k.b.assign(n, b);
  k.c.assign(n, c);
  k.rho.assign(n, rho);
  k.a.assign(n, a);
  return with_tight_bounds(std::move(k), mesh);
}

TimeGrid make_time_grid(double T, double dt_max) {
  require(std::isfinite(T) && T > 0.0, "time horizon must be positive");
  require(std::isfinite(dt_max) && dt_max > 0.0, "time step must be positive");
  const auto steps = static_cast<std::size_t>(std::ceil(T / dt_max - 1e-9));
  require(steps >= 2, "time grid needs at least two steps");
  return {T, T / static_cast<double>(steps), steps};
}

double stability_dt(const Mesh& mesh, const Coefficients& coeffs, double safety) {
  require(safety > 0.0 && safety < 1.0, "stability safety factor must lie in (0, 1)");
  const double rho_min = *std::min_element(coeffs.rho.begin(), coeffs.rho.end());
  const double a_max = *std::max_element(coeffs.a.begin(), coeffs.a.end());
  return safety * mesh.spacing() * std::sqrt(rho_min / a_max);
}

Field2D sample_space_time(const Mesh& mesh, const TimeGrid& grid, const std::function<double(double, double)>& fn) {
  const auto xs = mesh.nodes();
  Field2D out(grid.levels(), xs.size());
  for (std::size_t n = 0; n < grid.levels(); ++n) {
    const double t = grid.time(n);
    for (std::size_t i = 0; i < xs.size(); ++i) out(n, i) = fn(xs[i], t);
  }
  return out;
}

std::vector<double> sample_space(const Mesh& mesh, const std::function<double(double)>& fn) {
  const auto xs = mesh.nodes();
  std::vector<double> out(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), fn);
  return out;
}

Field2D Problem::source_values() const {
  const std::size_t levels = time.levels();
  const std::size_t n = node_count();
  if (const auto* g = std::get_if<GriddedSource>(&source)) return g->values;
  if (const auto* fs = std::get_if<FactoredSource>(&source)) {
    Field2D out(levels, n);
    for (std::size_t l = 0; l < levels; ++l) {
      for (std::size_t i = 0; i < n; ++i) out(l, i) = fs->R(l, i) * fs->f[i];
    }
    return out;
  }
  return Field2D(levels, n);
}

void Problem::validate() const {
  require(mesh.dim() == 1, "the solver works on 1-D meshes only");
  coeffs.validate(mesh);
  const std::size_t n = node_count();
  require(u0.size() == n && u1.size() == n, "initial data must have one sample per node");
  require(all_finite(u0) && all_finite(u1), "initial data must be finite");
  require(std::abs(u0.front()) <= 1e-12 && std::abs(u0.back()) <= 1e-12,
          "u0 must vanish on the boundary (Dirichlet compatibility)");
  require(time.steps >= 2 && time.dt > 0.0, "time grid is not initialised");
  const double bound = mesh.spacing() * std::sqrt(*std::min_element(coeffs.rho.begin(), coeffs.rho.end()) /
                                                  *std::max_element(coeffs.a.begin(), coeffs.a.end()));
  if (time.dt > bound * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "time step " << time.dt << " violates the leapfrog stability bound " << bound;
    throw PreconditionError(msg.str());
  }
  const std::size_t levels = time.levels();
  if (const auto* g = std::get_if<GriddedSource>(&source)) {
    require(g->values.rows() == levels && g->values.cols() == n, "gridded source has the wrong shape");
  } else if (const auto* fs = std::get_if<FactoredSource>(&source)) {
    require(fs->R.rows() == levels && fs->R.cols() == n && fs->f.size() == n,
            "factored source has the wrong shape");
    if (fs->r0 > 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        require(std::abs(fs->R(0, i)) >= fs->r0 * (1.0 - 1e-12), "source factor violates |R(x,0)| >= r0");
      }
    }
  }
}

void differentiate(std::span<const double> v, double step, std::span<double> out) {
  const std::size_t n = v.size();
  require(n >= 2 && out.size() == n, "differentiation needs at least two samples");
  if (n == 2) {
    out[0] = out[1] = (v[1] - v[0]) / step;
    return;
  }
  const double inv2 = 1.0 / (2.0 * step);
  out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv2;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (v[i + 1] - v[i - 1]) * inv2;
  out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv2;
}

Field2D FieldHistory::time_derivative() const {
  Field2D out(u.rows(), u.cols());
  std::vector<double> col(u.rows()), d(u.rows());
  for (std::size_t i = 0; i < u.cols(); ++i) {
    for (std::size_t l = 0; l < u.rows(); ++l) col[l] = u(l, i);
    differentiate(col, dt, d);
    for (std::size_t l = 0; l < u.rows(); ++l) out(l, i) = d[l];
  }
  return out;
}

Field2D FieldHistory::space_derivative() const {
  Field2D out(u.rows(), u.cols());
  const double h = mesh.spacing();
  for (std::size_t l = 0; l < u.rows(); ++l) differentiate(u.row(l), h, out.row(l));
  return out;
}

std::vector<std::pair<std::size_t, double>> normal_derivative_stencil(std::size_t node_count,
                                                                      const BoundaryFace& face, double h) {
  require(node_count >= 3, "normal derivative needs at least three nodes");
  require(face.side == Side::Left || face.side == Side::Right, "1-D normal derivative needs a left/right face");
  require(face.node_index == 0 || face.node_index == node_count - 1, "boundary face does not match the mesh");
  const double s = 1.0 / (2.0 * h);
  if (face.side == Side::Right) {
    const std::size_t e = node_count - 1;
    require(face.node_index == e, "right face must sit on the last node");
    return {{e, 3.0 * s}, {e - 1, -4.0 * s}, {e - 2, s}};
  }
  require(face.node_index == 0, "left face must sit on node 0");
  // nu = -1: d_nu u = -u_x(a).
  return {{0, 3.0 * s}, {1, -4.0 * s}, {2, s}};
}

double normal_derivative(std::span<const double> row, const BoundaryFace& face, double h) {
  double acc = 0.0;
  for (const auto& [idx, w] : normal_derivative_stencil(row.size(), face, h)) acc += w * row[idx];
  return acc;
}

SpatialOperator::SpatialOperator(const Mesh& mesh, const Coefficients& k) {
  const std::size_t n = mesh.node_count();
  const double h = mesh.spacing();
  const double ih2 = 1.0 / (h * h);
  const double i2h = 1.0 / (2.0 * h);
  lower_.assign(n, 0.0);
  diag_.assign(n, 0.0);
  upper_.assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double a_minus = 0.5 * (k.a[i - 1] + k.a[i]);
    const double a_plus = 0.5 * (k.a[i] + k.a[i + 1]);
    const double s = ih2 / k.rho[i];
    lower_[i] = s * a_minus + k.b[i] * i2h;
    upper_[i] = s * a_plus - k.b[i] * i2h;
    diag_[i] = -s * (a_minus + a_plus) - k.c[i];
  }
}

void SpatialOperator::apply(std::span<const double> u, std::span<double> out) const {
  const std::size_t n = diag_.size();
  out[0] = 0.0;
  out[n - 1] = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = lower_[i] * u[i - 1] + diag_[i] * u[i] + upper_[i] * u[i + 1];
}

void SpatialOperator::apply_transpose(std::span<const double> w, std::span<double> out) const {
  const std::size_t n = diag_.size();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i - 1] += lower_[i] * w[i];
    out[i] += diag_[i] * w[i];
    out[i + 1] += upper_[i] * w[i];
  }
}

LeapfrogStepper::LeapfrogStepper(const Problem& problem)
    : spatial_(problem.mesh, problem.coeffs),
      q_(problem.coeffs.q),
      dt_(problem.time.dt),
      work_(problem.node_count()) {}

void LeapfrogStepper::start(std::span<const double> u0, std::span<const double> u1, std::span<const double> forcing,
                            std::span<double> next) const {
  const std::size_t n = next.size();
  spatial_.apply(u0, work_);
  const double half = 0.5 * dt_ * dt_;
  for (std::size_t i = 1; i + 1 < n; ++i) next[i] = u0[i] + dt_ * u1[i] + half * (work_[i] + forcing[i]);
  next[0] = 0.0;
  next[n - 1] = 0.0;
}

void LeapfrogStepper::step(std::span<const double> prev, std::span<const double> curr,
                           std::span<const double> caputo, std::span<const double> forcing,
                           std::span<double> next) const {
  const std::size_t n = next.size();
  spatial_.apply(curr, work_);
  const double dt2 = dt_ * dt_;
  if (caputo.empty()) {
    for (std::size_t i = 1; i + 1 < n; ++i) next[i] = 2.0 * curr[i] - prev[i] + dt2 * (work_[i] + forcing[i]);
  } else {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      next[i] = 2.0 * curr[i] - prev[i] + dt2 * (work_[i] - q_[i] * caputo[i] + forcing[i]);
    }
  }
  next[0] = 0.0;
  next[n - 1] = 0.0;
  for (double v : next) {
    if (!std::isfinite(v) || std::abs(v) > kBlowUp) {
      throw InstabilityError("leapfrog step produced non-finite or runaway values (check the time step)");
    }
  }
}

namespace {

FieldHistory run_leapfrog(const Problem& p, const Field2D& forcing, bool damped) {
  p.validate();
  require(forcing.rows() == p.time.levels() && forcing.cols() == p.node_count(), "forcing has the wrong shape");
  const std::size_t levels = p.time.levels();
  const std::size_t n = p.node_count();

  FieldHistory h;
  h.mesh = p.mesh;
  h.dt = p.time.dt;
  h.u = Field2D(levels, n);
  h.initial_velocity = p.u1;
  std::copy(p.u0.begin(), p.u0.end(), h.u.row(0).begin());
  // u0 is only required to vanish on the boundary up to round-off.
  h.u(0, 0) = 0.0;
  h.u(0, n - 1) = 0.0;

  const LeapfrogStepper stepper(p);
  stepper.start(h.u.row(0), p.u1, forcing.row(0), h.u.row(1));

  std::optional<CaputoOperator> caputo;
  Field2D increments;
  std::vector<double> cvals;
  if (damped) {
    caputo.emplace(p.coeffs.alpha, p.coeffs.alpha1, p.time.dt, p.time.steps);
    increments = Field2D(levels, n);
    cvals.resize(n);
    for (std::size_t i = 0; i < n; ++i) increments(1, i) = h.u(1, i) - h.u(0, i);
  }
  for (std::size_t l = 1; l + 1 < levels; ++l) {
    if (damped) caputo->apply(increments, l, cvals);
    stepper.step(h.u.row(l - 1), h.u.row(l), cvals, forcing.row(l), h.u.row(l + 1));
    if (damped) {
      for (std::size_t i = 0; i < n; ++i) increments(l + 1, i) = h.u(l + 1, i) - h.u(l, i);
    }
  }
  return h;
}

}  // namespace

FieldHistory solve_forward(const Problem& problem) {
  return run_leapfrog(problem, problem.source_values(), problem.coeffs.has_damping());
}

FieldHistory solve_undamped(const Problem& problem) {
  return run_leapfrog(problem, problem.source_values(), false);
}

FieldHistory solve_undamped_with(const Problem& problem, const Field2D& extra_forcing) {
  Field2D forcing = problem.source_values();
  require(extra_forcing.rows() == forcing.rows() && extra_forcing.cols() == forcing.cols(),
          "extra forcing has the wrong shape");
  for (std::size_t k = 0; k < forcing.data().size(); ++k) forcing.data()[k] += extra_forcing.data()[k];
  return run_leapfrog(problem, forcing, false);
}

PicardResult solve_picard(const Problem& problem, double tol, int m_max) {
  require(tol > 0.0, "Picard tolerance must be positive");
  require(m_max >= 1, "Picard iteration cap must be at least 1");
  PicardResult result;
  FieldHistory current = solve_undamped(problem);
  const CaputoOperator caputo(problem.coeffs.alpha, problem.coeffs.alpha1, problem.time.dt, problem.time.steps);
  const auto& q = problem.coeffs.q;

  for (int k = 1; k <= m_max; ++k) {
    Field2D damping = caputo.apply_history(current.u);
    for (std::size_t l = 0; l < damping.rows(); ++l) {
      auto row = damping.row(l);
      for (std::size_t i = 0; i < row.size(); ++i) row[i] *= -q[i];
    }
    FieldHistory next = solve_undamped_with(problem, damping);
    double gap = 0.0;
    for (std::size_t j = 0; j < next.u.data().size(); ++j) {
      gap = std::max(gap, std::abs(next.u.data()[j] - current.u.data()[j]));
    }
    result.residuals.push_back(gap);
    current = std::move(next);
    if (gap <= tol) {
      result.iterations = k;
      result.history = std::move(current);
      return result;
    }
  }
  std::ostringstream msg;
  msg << "Picard iteration did not reach tolerance " << tol << " within " << m_max
      << " sweeps (final gap " << result.residuals.back() << ")";
  throw ConvergenceError(msg.str(), result.residuals.back());
}

}  // namespace fracwave
