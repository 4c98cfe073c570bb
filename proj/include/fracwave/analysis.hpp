#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracwave/field.hpp"
#include "fracwave/forward.hpp"
#include "fracwave/mesh.hpp"

namespace fracwave {

/// Weight parameters for psi = |x - x0|^2 - beta t^2, phi = exp(lambda psi).
struct CarlemanParams {
  Point x0;
  double beta = 0.0;
  double lambda = 1.0;
  std::vector<double> s_grid;
  ObsGeometry geometry;
};

CarlemanParams make_carleman_params(const ObsGeometry& geometry, double lambda, std::vector<double> s_grid);

struct CarlemanWeight {
  double psi;
  double phi;
};

CarlemanWeight carleman_weight(Point x, double t, const CarlemanParams& params);

/// One evaluated inequality lhs <= C * rhs at one parameter sample.
struct InequalityRow {
  std::string lemma;
  double s = 0.0;
  double lambda = 0.0;
  double lhs = 0.0;
  std::vector<double> rhs_terms;
  double rhs_total = 0.0;
  double fitted_C = 0.0;  // lhs / rhs_total, 0 for 0/0
  bool pass = false;
};

struct InequalityReport {
  std::string lemma;
  std::vector<std::string> rhs_labels;
  std::vector<InequalityRow> rows;
  bool pass = false;
  std::string grid;  // e.g. "nodes=201 levels=668"
  std::uint64_t seed = 0;
};

/// Zero right-hand side against a nonzero left-hand side.
class InequalityViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Trapezoid rule on a uniform grid.
double trapezoid(std::span<const double> v, double h);

/// E(t) = int (a/rho) |u_x|^2 + |u_t|^2 dx at one level.
double energy(const FieldHistory& history, const Coefficients& coeffs, std::size_t t_index);
std::vector<double> energy_series(const FieldHistory& history, const Coefficients& coeffs);

/// Squared L2(Q) norm of a (levels x nodes) array by the tensor trapezoid rule.
double space_time_norm_sq(const Field2D& f, double h, double dt);

/// Sup-over-time constants of E(t) <= C (E(0) + |F|^2) and
/// E(0) <= C/t (int_0^t E + |F|^2). Rows "en1" and "en2".
InequalityReport check_energy_bounds(const FieldHistory& history, const Coefficients& coeffs, const Field2D& F);

struct EnergyEquivalence {
  double lower_ratio;  // min_t E / (|u_x|^2 + |u_t|^2)
  double upper_ratio;  // max_t of the same ratio
  double lower_bound;  // min{1, a0/rho1}
  double upper_bound;  // max{1, a1/rho0}
  bool holds;
};

EnergyEquivalence check_energy_equivalence(const FieldHistory& history, const Coefficients& coeffs);

/// max{1, T} / min_{(1,2)} Gamma.
double frac_damping_constant(double T);

/// |e^{s phi} d_t^alpha u| <= C |e^{s phi} d_t u| over (0, T), both sides as
/// L2 norms (not squared); passes if the ratio stays below the explicit
/// constant plus a 5% discretization margin.
InequalityReport check_frac_damping_bound(const FieldHistory& history, const Coefficients& coeffs,
                                          const CarlemanParams& params, double s);

enum class Parity { Even, Odd };

/// Extends a history on [0, T] to [-T, T] by u(-t) = u(t) (even) or
/// u(-t) = -u(t) (odd). Odd needs u(., 0) = 0, even needs d_t u(., 0) = 0.
FieldHistory extend_time_symmetric(const FieldHistory& history, Parity parity);

/// Levels with t >= 0 of a history whose grid contains t = 0.
FieldHistory restrict_to_nonnegative_time(const FieldHistory& history);

/// Weighted hyperbolic estimate on (-T, T):
///   s|e^{s phi} grad_{x,t} u|^2 + s^3 |e^{s phi} u|^2
///     <= C (|e^{s phi} L0 u|^2 + s |e^{s phi} d_nu u|^2_{Gamma0} + E_{s,-T} + E_{s,T}).
/// Weights are normalised by exp(-2 s max phi); ratios are unaffected.
InequalityReport check_carleman(const FieldHistory& history, const Coefficients& coeffs,
                                const CarlemanParams& params);

/// Same estimate for a damped solve on (0, T), with the fractional term moved
/// to the right-hand side through the explicit damping constant:
///   rhs = |e^{s phi} F|^2 + (K |q|_inf)^2 |e^{s phi} d_t u|^2 + s |e^{s phi} d_nu u|^2 + E_{s,T}.
InequalityReport check_carleman_damped(const FieldHistory& history, const Coefficients& coeffs,
                                       const CarlemanParams& params, const Field2D& F);

/// |e^{s phi(.,0)} d_t v(.,0)|^2 <= C (|e^{s phi} box v|^2 + s lambda |e^{s phi} grad_{x,t} v|^2
///                                      + |e^{s phi(.,T)} grad_{x,t} v(.,T)|^2).
InequalityReport check_initial_trace_estimate(const FieldHistory& v, const CarlemanParams& params, double s);

}  // namespace fracwave
