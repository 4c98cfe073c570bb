#include "fracwave/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fracwave/caputo.hpp"
#include "fracwave/error.hpp"

namespace fracwave {

namespace {

constexpr double kFracMargin = 1.05;

std::string grid_label(const FieldHistory& h) {
  std::ostringstream s;
  s << "nodes=" << h.node_count() << " levels=" << h.levels() << " dt=" << h.dt;
  return s.str();
}

double fitted(double lhs, double rhs, const std::string& lemma) {
  if (rhs > 0.0) return lhs / rhs;
  if (lhs == 0.0) return 0.0;
  throw InequalityViolation(lemma + ": right-hand side vanishes while the left-hand side does not");
}

void require_dirichlet(const FieldHistory& h, const char* what) {
  double scale = 0.0;
  for (double v : h.u.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t l = 0; l < h.levels(); ++l) {
    require(std::abs(h.u(l, 0)) <= 1e-12 * std::max(1.0, scale) &&
                std::abs(h.u(l, h.node_count() - 1)) <= 1e-12 * std::max(1.0, scale),
            std::string(what) + " needs a field vanishing on the boundary");
  }
}

/// Trapezoid weight of index i in a grid of n points.
double trap_w(std::size_t i, std::size_t n) { return (i == 0 || i + 1 == n) ? 0.5 : 1.0; }

/// Normalised weights exp(2 s (phi - max phi)) on the history grid.
Field2D weight_field(const FieldHistory& h, const CarlemanParams& p, double s) {
  const auto xs = h.mesh.nodes();
  Field2D phi(h.levels(), xs.size());
  double phi_max = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < h.levels(); ++l) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      phi(l, i) = carleman_weight({xs[i], 0.0}, h.time(l), p).phi;
      phi_max = std::max(phi_max, phi(l, i));
    }
  }
  for (double& v : phi.data()) v = std::exp(2.0 * s * (v - phi_max));
  return phi;
}

/// sum over the tensor trapezoid grid of w * (f1^2 + f2^2 ...).
double weighted_sq(const Field2D& w, std::initializer_list<const Field2D*> fields, double h, double dt) {
  const std::size_t L = w.rows();
  const std::size_t n = w.cols();
  double acc = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    double row = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (const Field2D* f : fields) v += (*f)(l, i) * (*f)(l, i);
      row += trap_w(i, n) * w(l, i) * v;
    }
    acc += trap_w(l, L) * row;
  }
  return acc * h * dt;
}

/// Same over a single level.
double weighted_level_sq(const Field2D& w, std::initializer_list<const Field2D*> fields, std::size_t l, double h) {
  const std::size_t n = w.cols();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (const Field2D* f : fields) v += (*f)(l, i) * (*f)(l, i);
    acc += trap_w(i, n) * w(l, i) * v;
  }
  return acc * h;
}

/// Rectangle rule over interior levels and nodes (where three-point stencils exist).
double weighted_interior_sq(const Field2D& w, const Field2D& f, double h, double dt) {
  double acc = 0.0;
  for (std::size_t l = 1; l + 1 < w.rows(); ++l) {
    for (std::size_t i = 1; i + 1 < w.cols(); ++i) acc += w(l, i) * f(l, i) * f(l, i);
  }
  return acc * h * dt;
}

/// s |e^{s phi} d_nu u|^2 over the patch and all levels.
double weighted_trace_sq(const FieldHistory& h, const Field2D& w, const BoundaryPatch& patch) {
  const std::size_t L = h.levels();
  const double hx = h.mesh.spacing();
  double acc = 0.0;
  for (const auto& face : patch.faces) {
    for (std::size_t l = 0; l < L; ++l) {
      const double d = normal_derivative(h.u.row(l), face, hx);
      acc += trap_w(l, L) * w(l, face.node_index) * d * d;
    }
  }
  return acc * h.dt;
}

/// Least-squares slope of log C against log s over the upper half of the grid.
bool non_increasing_upper_half(const std::vector<InequalityRow>& rows) {
  const std::size_t start = rows.size() / 2;
  std::vector<double> xs, ys;
  for (std::size_t k = start; k < rows.size(); ++k) {
    if (rows[k].fitted_C <= 0.0) return true;  // vacuous (null input)
    xs.push_back(std::log(rows[k].s));
    ys.push_back(std::log(rows[k].fitted_C));
  }
  if (xs.size() < 2) return true;
  const double mx = [&] { double m = 0; for (double v : xs) m += v; return m / xs.size(); }();
  const double my = [&] { double m = 0; for (double v : ys) m += v; return m / ys.size(); }();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  return sxx == 0.0 || sxy / sxx <= 1e-9;
}

void finalize_trend_report(InequalityReport& r) {
  bool finite = !r.rows.empty();
  for (auto& row : r.rows) {
    row.pass = std::isfinite(row.fitted_C);
    finite = finite && row.pass;
  }
  r.pass = finite && non_increasing_upper_half(r.rows);
}

void require_positive_grid(const CarlemanParams& p) {
  require(!p.s_grid.empty(), "Carleman s-grid must not be empty");
  for (std::size_t k = 0; k < p.s_grid.size(); ++k) {
    require(p.s_grid[k] > 0.0, "Carleman s-grid values must be positive");
    require(k == 0 || p.s_grid[k] > p.s_grid[k - 1], "Carleman s-grid must be increasing");
  }
}

}  // namespace

CarlemanParams make_carleman_params(const ObsGeometry& geometry, double lambda, std::vector<double> s_grid) {
  require(geometry.beta > 0.0 && geometry.beta < 1.0, "beta must lie in (0, 1)");
  require(geometry.beta * geometry.T * geometry.T >= 2.0 * (geometry.d1 * geometry.d1 - geometry.d0 * geometry.d0),
          "beta*T^2 >= 2(d1^2 - d0^2) does not hold");
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be nonnegative");
  CarlemanParams p;
  p.x0 = geometry.x0;
  p.beta = geometry.beta;
  p.lambda = lambda;
  p.s_grid = std::move(s_grid);
  p.geometry = geometry;
  require_positive_grid(p);
  return p;
}

CarlemanWeight carleman_weight(Point x, double t, const CarlemanParams& params) {
  const double dx = x.x - params.x0.x;
  const double dy = x.y - params.x0.y;
  const double psi = dx * dx + dy * dy - params.beta * t * t;
  return {psi, std::exp(params.lambda * psi)};
}

double trapezoid(std::span<const double> v, double h) {
  if (v.size() < 2) return 0.0;
  double acc = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) acc += v[i];
  return acc * h;
}

double space_time_norm_sq(const Field2D& f, double h, double dt) {
  const Field2D ones(f.rows(), f.cols(), 1.0);
  return weighted_sq(ones, {&f}, h, dt);
}

std::vector<double> energy_series(const FieldHistory& history, const Coefficients& coeffs) {
  require(coeffs.node_count() == history.node_count(), "coefficients do not match the history");
  const Field2D ux = history.space_derivative();
  const Field2D ut = history.time_derivative();
  const double h = history.mesh.spacing();
  std::vector<double> E(history.levels());
  std::vector<double> integrand(history.node_count());
  for (std::size_t l = 0; l < history.levels(); ++l) {
    for (std::size_t i = 0; i < integrand.size(); ++i) {
      integrand[i] = coeffs.a[i] / coeffs.rho[i] * ux(l, i) * ux(l, i) + ut(l, i) * ut(l, i);
    }
    E[l] = trapezoid(integrand, h);
  }
  return E;
}

double energy(const FieldHistory& history, const Coefficients& coeffs, std::size_t t_index) {
  require(t_index < history.levels(), "energy time index out of range");
  require(coeffs.node_count() == history.node_count(), "coefficients do not match the history");
  const std::size_t n = history.node_count();
  const std::size_t L = history.levels();
  std::vector<double> ux(n), ut(n), col(L), d(L), integrand(n);
  differentiate(history.u.row(t_index), history.mesh.spacing(), ux);
  // d_t u at one level: same stencils as FieldHistory::time_derivative.
  for (std::size_t i = 0; i < n; ++i) {
    double v;
    const double inv2 = 1.0 / (2.0 * history.dt);
    if (L == 2) {
      v = (history.u(1, i) - history.u(0, i)) / history.dt;
    } else if (t_index == 0) {
      v = (-3.0 * history.u(0, i) + 4.0 * history.u(1, i) - history.u(2, i)) * inv2;
    } else if (t_index + 1 == L) {
      v = (3.0 * history.u(L - 1, i) - 4.0 * history.u(L - 2, i) + history.u(L - 3, i)) * inv2;
    } else {
      v = (history.u(t_index + 1, i) - history.u(t_index - 1, i)) * inv2;
    }
    ut[i] = v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    integrand[i] = coeffs.a[i] / coeffs.rho[i] * ux[i] * ux[i] + ut[i] * ut[i];
  }
  return trapezoid(integrand, history.mesh.spacing());
}

InequalityReport check_energy_bounds(const FieldHistory& history, const Coefficients& coeffs, const Field2D& F) {
  require(F.empty() || (F.rows() == history.levels() && F.cols() == history.node_count()),
          "source does not match the history grid");
  const std::vector<double> E = energy_series(history, coeffs);
  const double F2 = F.empty() ? 0.0 : space_time_norm_sq(F, history.mesh.spacing(), history.dt);

  InequalityReport r;
  r.lemma = "energy";
  r.rhs_labels = {"E0", "F_sq"};
  r.grid = grid_label(history);

  InequalityRow en1;
  en1.lemma = "en1";
  for (std::size_t l = 0; l < E.size(); ++l) {
    const double c = fitted(E[l], E[0] + F2, "en1");
    if (l == 0 || c > en1.fitted_C) {
      en1.fitted_C = c;
      en1.lhs = E[l];
      en1.rhs_total = E[0] + F2;
    }
  }
  en1.rhs_terms = {E[0], F2};

  InequalityRow en2;
  en2.lemma = "en2";
  double integral = 0.0;
  for (std::size_t l = 1; l < E.size(); ++l) {
    integral += 0.5 * history.dt * (E[l - 1] + E[l]);
    const double t = history.time(l) - history.t0;
    const double c = fitted(t * E[0], integral + F2, "en2");
    if (l == 1 || c > en2.fitted_C) {
      en2.fitted_C = c;
      en2.lhs = t * E[0];
      en2.rhs_total = integral + F2;
      en2.rhs_terms = {integral, F2};
    }
  }
  en1.pass = std::isfinite(en1.fitted_C);
  en2.pass = std::isfinite(en2.fitted_C);
  r.rows = {en1, en2};
  r.pass = en1.pass && en2.pass;
  return r;
}

EnergyEquivalence check_energy_equivalence(const FieldHistory& history, const Coefficients& coeffs) {
  const Field2D ux = history.space_derivative();
  const Field2D ut = history.time_derivative();
  const std::vector<double> E = energy_series(history, coeffs);
  const double h = history.mesh.spacing();
  const double a1 = *std::max_element(coeffs.a.begin(), coeffs.a.end());
  EnergyEquivalence eq{};
  eq.lower_bound = std::min(1.0, coeffs.a0 / coeffs.rho1);
  eq.upper_bound = std::max(1.0, a1 / coeffs.rho0);
  eq.lower_ratio = std::numeric_limits<double>::infinity();
  eq.upper_ratio = 0.0;
  std::vector<double> g(history.node_count());
  for (std::size_t l = 0; l < history.levels(); ++l) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = ux(l, i) * ux(l, i) + ut(l, i) * ut(l, i);
    const double base = trapezoid(g, h);
    if (base <= 0.0) continue;
    eq.lower_ratio = std::min(eq.lower_ratio, E[l] / base);
    eq.upper_ratio = std::max(eq.upper_ratio, E[l] / base);
  }
  if (!std::isfinite(eq.lower_ratio)) eq.lower_ratio = eq.lower_bound;
  const double tol = 1e-12;
  eq.holds = eq.lower_ratio >= eq.lower_bound * (1.0 - tol) && eq.upper_ratio <= eq.upper_bound * (1.0 + tol);
  return eq;
}

double frac_damping_constant(double T) { return std::max(1.0, T) / gamma_minimum_on_1_2().value; }

InequalityReport check_frac_damping_bound(const FieldHistory& history, const Coefficients& coeffs,
                                          const CarlemanParams& params, double s) {
  require(history.levels() >= 2, "damping bound needs at least two time levels");
  require(std::abs(history.t0) <= 1e-14, "damping bound expects a history starting at t = 0");
  require(s >= 0.0, "s must be nonnegative");
  const CaputoOperator op(coeffs.alpha, coeffs.alpha1, history.dt, history.levels() - 1);
  const Field2D cap = op.apply_history(history.u);
  const Field2D ut = history.time_derivative();
  const Field2D w = weight_field(history, params, s);
  const double h = history.mesh.spacing();
  const double num = std::sqrt(weighted_sq(w, {&cap}, h, history.dt));
  const double den = std::sqrt(weighted_sq(w, {&ut}, h, history.dt));
  const double bound = frac_damping_constant(history.horizon());

  InequalityReport r;
  r.lemma = "frac-damping";
  r.rhs_labels = {"weighted_dt_u"};
  r.grid = grid_label(history);
  InequalityRow row{"frac-damping", s, params.lambda, num, {den}, den, fitted(num, den, "frac-damping")};
  row.pass = row.fitted_C <= bound * kFracMargin;
  r.rows.push_back(row);
  r.pass = row.pass;
  return r;
}

FieldHistory extend_time_symmetric(const FieldHistory& history, Parity parity) {
  require(std::abs(history.t0) <= 1e-14, "symmetric extension expects a history starting at t = 0");
  require(history.levels() >= 2, "symmetric extension needs at least two levels");
  const std::size_t n = history.node_count();
  const double tol = 1e-10;
  if (parity == Parity::Odd) {
    for (std::size_t i = 0; i < n; ++i) {
      require(std::abs(history.u(0, i)) <= tol, "odd extension requires u(., 0) = 0");
    }
  } else {
    std::vector<double> v0(n);
    if (history.initial_velocity) {
      v0 = *history.initial_velocity;
    } else {
      const Field2D ut = history.time_derivative();
      for (std::size_t i = 0; i < n; ++i) v0[i] = ut(0, i);
    }
    for (double v : v0) require(std::abs(v) <= tol, "even extension requires d_t u(., 0) = 0");
  }
  const std::size_t N = history.levels() - 1;
  const double sign = parity == Parity::Odd ? -1.0 : 1.0;
  FieldHistory out;
  out.mesh = history.mesh;
  out.dt = history.dt;
  out.t0 = -history.time(N);
  out.u = Field2D(2 * N + 1, n);
  for (std::size_t l = 0; l <= N; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      out.u(N + l, i) = history.u(l, i);
      if (l > 0) out.u(N - l, i) = sign * history.u(l, i);
    }
  }
  return out;
}

FieldHistory restrict_to_nonnegative_time(const FieldHistory& history) {
  const double first = -history.t0 / history.dt;
  const auto zero = static_cast<std::size_t>(std::llround(first));
  require(first >= -1e-9 && std::abs(first - static_cast<double>(zero)) <= 1e-9 && zero < history.levels(),
          "history grid does not contain t = 0");
  FieldHistory out;
  out.mesh = history.mesh;
  out.dt = history.dt;
  out.t0 = 0.0;
  out.u = Field2D(history.levels() - zero, history.node_count());
  for (std::size_t l = zero; l < history.levels(); ++l) {
    std::copy(history.u.row(l).begin(), history.u.row(l).end(), out.u.row(l - zero).begin());
  }
  return out;
}

InequalityReport check_carleman(const FieldHistory& history, const Coefficients& coeffs,
                                const CarlemanParams& params) {
  require_positive_grid(params);
  require(history.levels() >= 3, "Carleman check needs at least three levels");
  require(history.t0 < 0.0 && std::abs(history.t0 + history.horizon()) <= 1e-9 * std::max(1.0, history.horizon()),
          "Carleman check expects a history on a symmetric interval (-T, T)");
  require(coeffs.node_count() == history.node_count(), "coefficients do not match the history");
  require_dirichlet(history, "Carleman check");

  const BoundaryPatch patch = gamma0_from_x0(history.mesh, params.x0);
  const double h = history.mesh.spacing();
  const double dt = history.dt;
  const std::size_t L = history.levels();
  const std::size_t n = history.node_count();
  const Field2D ux = history.space_derivative();
  const Field2D ut = history.time_derivative();

  // L0 u = u_tt - L u on interior levels and nodes.
  Field2D l0u(L, n);
  const SpatialOperator op(history.mesh, coeffs);
  std::vector<double> lu(n);
  for (std::size_t l = 1; l + 1 < L; ++l) {
    op.apply(history.u.row(l), lu);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double utt = (history.u(l + 1, i) - 2.0 * history.u(l, i) + history.u(l - 1, i)) / (dt * dt);
      l0u(l, i) = utt - lu[i];
    }
  }

  InequalityReport r;
  r.lemma = "carleman";
  r.rhs_labels = {"L0u", "trace", "end_energy"};
  r.grid = grid_label(history);
  for (double s : params.s_grid) {
    const Field2D w = weight_field(history, params, s);
    const double lhs = s * weighted_sq(w, {&ux, &ut}, h, dt) + s * s * s * weighted_sq(w, {&history.u}, h, dt);
    const double rhs_l0 = weighted_interior_sq(w, l0u, h, dt);
    const double rhs_trace = s * weighted_trace_sq(history, w, patch);
    double rhs_end = 0.0;
    for (std::size_t l : {std::size_t{0}, L - 1}) {
      rhs_end += s * weighted_level_sq(w, {&ux, &ut}, l, h) + s * s * s * weighted_level_sq(w, {&history.u}, l, h);
    }
    const double rhs = rhs_l0 + rhs_trace + rhs_end;
    r.rows.push_back({"carleman", s, params.lambda, lhs, {rhs_l0, rhs_trace, rhs_end}, rhs, fitted(lhs, rhs, "carleman")});
  }
  finalize_trend_report(r);
  return r;
}

InequalityReport check_carleman_damped(const FieldHistory& history, const Coefficients& coeffs,
                                       const CarlemanParams& params, const Field2D& F) {
  require_positive_grid(params);
  require(history.levels() >= 3, "Carleman check needs at least three levels");
  require(std::abs(history.t0) <= 1e-14, "damped Carleman check expects a history on (0, T)");
  require(coeffs.node_count() == history.node_count(), "coefficients do not match the history");
  require(F.empty() || (F.rows() == history.levels() && F.cols() == history.node_count()),
          "source does not match the history grid");
  require_dirichlet(history, "Carleman check");

  const BoundaryPatch patch = gamma0_from_x0(history.mesh, params.x0);
  const double h = history.mesh.spacing();
  const double dt = history.dt;
  const std::size_t L = history.levels();
  const Field2D ux = history.space_derivative();
  const Field2D ut = history.time_derivative();
  const Field2D zero(L, history.node_count());
  const Field2D& src = F.empty() ? zero : F;
  double q_sup = 0.0;
  for (double v : coeffs.q) q_sup = std::max(q_sup, std::abs(v));
  const double k = frac_damping_constant(history.horizon()) * q_sup;

  InequalityReport r;
  r.lemma = "carleman-damped";
  r.rhs_labels = {"source", "damping", "trace", "end_energy"};
  r.grid = grid_label(history);
  for (double s : params.s_grid) {
    const Field2D w = weight_field(history, params, s);
    const double lhs = s * weighted_sq(w, {&ux, &ut}, h, dt) + s * s * s * weighted_sq(w, {&history.u}, h, dt);
    const double rhs_src = weighted_sq(w, {&src}, h, dt);
    const double rhs_damp = k * k * weighted_sq(w, {&ut}, h, dt);
    const double rhs_trace = s * weighted_trace_sq(history, w, patch);
    const double rhs_end =
        s * weighted_level_sq(w, {&ux, &ut}, L - 1, h) + s * s * s * weighted_level_sq(w, {&history.u}, L - 1, h);
    const double rhs = rhs_src + rhs_damp + rhs_trace + rhs_end;
    r.rows.push_back({"carleman-damped", s, params.lambda, lhs, {rhs_src, rhs_damp, rhs_trace, rhs_end}, rhs,
                      fitted(lhs, rhs, "carleman-damped")});
  }
  finalize_trend_report(r);
  return r;
}

InequalityReport check_initial_trace_estimate(const FieldHistory& v, const CarlemanParams& params, double s) {
  require(v.levels() >= 3, "initial-trace estimate needs at least three levels");
  require(std::abs(v.t0) <= 1e-14, "initial-trace estimate expects a history on (0, T)");
  require(s >= 0.0, "s must be nonnegative");
  require_dirichlet(v, "initial-trace estimate");
  const double h = v.mesh.spacing();
  const double dt = v.dt;
  const std::size_t L = v.levels();
  const std::size_t n = v.node_count();
  const Field2D vx = v.space_derivative();
  const Field2D vt = v.time_derivative();
  const Field2D w = weight_field(v, params, s);

  Field2D vt0(1, n);
  for (std::size_t i = 0; i < n; ++i) vt0(0, i) = v.initial_velocity ? (*v.initial_velocity)[i] : vt(0, i);
  Field2D w0(1, n);
  for (std::size_t i = 0; i < n; ++i) w0(0, i) = w(0, i);
  const double lhs = weighted_level_sq(w0, {&vt0}, 0, h);

  Field2D box(L, n);
  for (std::size_t l = 1; l + 1 < L; ++l) {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double vtt = (v.u(l + 1, i) - 2.0 * v.u(l, i) + v.u(l - 1, i)) / (dt * dt);
      const double vxx = (v.u(l, i + 1) - 2.0 * v.u(l, i) + v.u(l, i - 1)) / (h * h);
      box(l, i) = vtt - vxx;
    }
  }
  const double rhs_box = weighted_interior_sq(w, box, h, dt);
  const double rhs_grad = s * params.lambda * weighted_sq(w, {&vx, &vt}, h, dt);
  const double rhs_end = weighted_level_sq(w, {&vx, &vt}, L - 1, h);
  const double rhs = rhs_box + rhs_grad + rhs_end;

  InequalityReport r;
  r.lemma = "initial-trace";
  r.rhs_labels = {"box", "gradient", "end_gradient"};
  r.grid = grid_label(v);
  InequalityRow row{"initial-trace", s, params.lambda, lhs, {rhs_box, rhs_grad, rhs_end}, rhs,
                    fitted(lhs, rhs, "initial-trace")};
  row.pass = std::isfinite(row.fitted_C);
  r.rows.push_back(row);
  r.pass = row.pass;
  return r;
}

}  // namespace fracwave
