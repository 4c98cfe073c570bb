#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fracwave/field.hpp"
#include "fracwave/mesh.hpp"

namespace fracwave {

/// Nodal coefficient samples of
///   u_tt + q d_t^alpha u - (1/rho)(a u_x)_x + b u_x + c u = F
/// together with their a-priori bounds.
struct Coefficients {
  std::vector<double> alpha, q, b, c, rho, a;
  double alpha1 = 0.0;  // sup alpha < 1
  double M = 0.0;       // |b|_inf + |c|_inf + |alpha|_{W1,inf} + |q|_{W1,inf}
  double rho0 = 0.0, rho1 = 0.0, a0 = 0.0;

  std::size_t node_count() const { return alpha.size(); }
  bool has_damping() const;

  /// Throws PreconditionError if any sample or declared bound is violated.
  void validate(const Mesh& mesh) const;
};

/// Discrete |b|_inf + |c|_inf + |alpha|_{W1,inf} + |q|_{W1,inf}, gradients by
/// forward differences.
double a_priori_norm(const Coefficients& coeffs, const Mesh& mesh);

/// Fills the bounds from the samples (alpha1 = max alpha, M = a_priori_norm, ...).
Coefficients with_tight_bounds(Coefficients coeffs, const Mesh& mesh);

/// Constant coefficients with tight bounds.
Coefficients uniform_coefficients(const Mesh& mesh, double alpha, double q, double b = 0.0, double c = 0.0,
                                  double rho = 1.0, double a = 1.0);

struct TimeGrid {
  double T = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;

  std::size_t levels() const { return steps + 1; }
  double time(std::size_t n) const { return static_cast<double>(n) * dt; }
};

/// Uniform grid on [0, T] with the largest step dt <= dt_max hitting T exactly.
TimeGrid make_time_grid(double T, double dt_max);

/// Explicit-leapfrog step bound safety * h * sqrt(min rho / max a), safety in (0, 1).
double stability_dt(const Mesh& mesh, const Coefficients& coeffs, double safety);

struct GriddedSource {
  Field2D values;  // (levels x nodes)
};

/// F(x, t) = R(x, t) f(x) with |R(x, 0)| >= r0.
struct FactoredSource {
  Field2D R;  // (levels x nodes)
  std::vector<double> f;
  double r0 = 0.0;
};

using Source = std::variant<std::monostate, GriddedSource, FactoredSource>;

Field2D sample_space_time(const Mesh& mesh, const TimeGrid& grid, const std::function<double(double, double)>& fn);
std::vector<double> sample_space(const Mesh& mesh, const std::function<double(double)>& fn);

struct Problem {
  Mesh mesh = Mesh::interval(0.0, 1.0, 2);
  Coefficients coeffs;
  std::vector<double> u0, u1;
  Source source;
  TimeGrid time;

  std::size_t node_count() const { return mesh.node_count(); }
  /// F sampled on the space-time grid (zeros when there is no source).
  Field2D source_values() const;
  void validate() const;
};

/// Space-time samples of u on the solver grid.
struct FieldHistory {
  Mesh mesh = Mesh::interval(0.0, 1.0, 2);
  double dt = 0.0;
  double t0 = 0.0;  // time of level 0
  Field2D u;        // (levels x nodes)
  /// Exact initial velocity when the producer knows it.
  std::optional<std::vector<double>> initial_velocity;

  std::size_t levels() const { return u.rows(); }
  std::size_t node_count() const { return u.cols(); }
  double time(std::size_t n) const { return t0 + static_cast<double>(n) * dt; }
  double horizon() const { return time(levels() - 1); }

  /// d_t u: central differences, second-order one-sided at the first and last level.
  Field2D time_derivative() const;
  /// d_x u: central differences, second-order one-sided at the end nodes.
  Field2D space_derivative() const;
};

/// Second-order derivative of a uniformly sampled sequence (central inside,
/// three-point one-sided at both ends).
void differentiate(std::span<const double> v, double step, std::span<double> out);

/// Outward normal derivative of a 1-D nodal row at a boundary face, by the
/// three-point one-sided difference.
double normal_derivative(std::span<const double> row, const BoundaryFace& face, double h);

/// Stencil weights (node index, coefficient) of normal_derivative().
std::vector<std::pair<std::size_t, double>> normal_derivative_stencil(std::size_t node_count,
                                                                      const BoundaryFace& face, double h);

/// The tridiagonal spatial operator L u = (1/rho)(a u_x)_x - b u_x - c u on
/// interior nodes; boundary rows are zero.
class SpatialOperator {
 public:
  SpatialOperator(const Mesh& mesh, const Coefficients& coeffs);

  std::size_t size() const { return diag_.size(); }
  void apply(std::span<const double> u, std::span<double> out) const;
  void apply_transpose(std::span<const double> w, std::span<double> out) const;

 private:
  std::vector<double> lower_, diag_, upper_;
};

/// One explicit leapfrog step for the damped wave equation. The Caputo value
/// passed to step() is the L1 value at the current level (levels <= n).
class LeapfrogStepper {
 public:
  explicit LeapfrogStepper(const Problem& problem);

  const SpatialOperator& spatial() const { return spatial_; }
  double dt() const { return dt_; }

  /// u^1 = u^0 + dt u1 + dt^2/2 (L u^0 + F^0); the Caputo term vanishes at t = 0.
  void start(std::span<const double> u0, std::span<const double> u1, std::span<const double> forcing,
             std::span<double> next) const;

  /// u^{n+1} = 2u^n - u^{n-1} + dt^2 (L u^n - q C^n + F^n), Dirichlet nodes set to 0.
  /// An empty caputo span means no damping term.
  void step(std::span<const double> prev, std::span<const double> curr, std::span<const double> caputo,
            std::span<const double> forcing, std::span<double> next) const;

 private:
  SpatialOperator spatial_;
  std::vector<double> q_;
  double dt_;
  mutable std::vector<double> work_;
};

FieldHistory solve_forward(const Problem& problem);

/// Same solve with the damping coefficient removed.
FieldHistory solve_undamped(const Problem& problem);

/// Undamped solve with an additional (levels x nodes) forcing.
FieldHistory solve_undamped_with(const Problem& problem, const Field2D& extra_forcing);

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct PicardResult {
  FieldHistory history;
  int iterations = 0;
  std::vector<double> residuals;  // sup-norm gap between successive iterates
};

/// Fixed-point iteration u <- undamped solve with forcing F - q d_t^alpha u.
/// Throws ConvergenceError if the gap is still above tol after m_max sweeps.
PicardResult solve_picard(const Problem& problem, double tol, int m_max);

}  // namespace fracwave
