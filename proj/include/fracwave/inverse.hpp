#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracwave/field.hpp"
#include "fracwave/forward.hpp"
#include "fracwave/mesh.hpp"

namespace fracwave {

enum class ObservationKind { Trace, TraceDt };

std::string to_string(ObservationKind kind);

/// d_nu u (Trace) or d_t d_nu u (TraceDt) on the patch, one column per face.
struct ObservationSeries {
  BoundaryPatch patch;
  std::vector<double> times;
  Field2D values;  // (levels x patch points)
  ObservationKind kind = ObservationKind::Trace;
  double noise_level = 0.0;
  double noise_norm = 0.0;  // Euclidean norm of the added perturbation
  std::uint64_t seed = 0;
};

/// Euclidean norm of all samples.
double euclidean_norm(const ObservationSeries& obs);
/// L2(Gamma0 x (0, T)) norm (trapezoid in t, counting measure on 1-D faces).
double l2_norm(const ObservationSeries& obs);

ObservationSeries neumann_trace(const FieldHistory& history, const BoundaryPatch& patch);

/// d_t of a trace series by the same stencils as FieldHistory::time_derivative.
ObservationSeries time_differentiate(const ObservationSeries& obs);

/// Transpose of differentiate() for a sequence of length n.
void differentiate_transpose(std::span<const double> y, double step, std::span<double> out);

/// History of v = d_t u on the same grid.
FieldHistory time_derivative_history(const FieldHistory& history);

/// Discretization, coefficients, time grid and observation patch shared by
/// every solve of an inverse experiment. The problem's initial data and
/// source are the known parts of the model.
struct ObservationTemplate {
  Problem problem;
  BoundaryPatch patch;
};

/// Known temporal-spatial factor R of F = R f, with |R(., 0)| >= r0 > 0.
struct SourceFactor {
  Field2D R;  // (levels x nodes)
  double r0 = 0.0;
};

/// Sensitivities of a linear functional of the whole solution history with
/// respect to (u0, u1, F): the exact transpose of the leapfrog recursion.
struct AdjointSensitivities {
  std::vector<double> u0;
  std::vector<double> u1;
  Field2D forcing;
};

AdjointSensitivities adjoint_solve(const Problem& problem, const Field2D& history_seeds);

/// f -> d_t d_nu u on the patch, for u0 = u1 = 0 and F = R f.
ObservationSeries forward_map_source(std::span<const double> f, const SourceFactor& factor,
                                     const ObservationTemplate& tmpl);

/// Transpose of forward_map_source in the Euclidean inner products.
std::vector<double> adjoint_map_source(const ObservationSeries& obs, const SourceFactor& factor,
                                       const ObservationTemplate& tmpl);

enum class InitialState { U0, U1 };

/// State -> d_nu u on the patch with the complementary state, and F, zero.
/// u0 is supported on interior nodes (H^1_0).
ObservationSeries forward_map_initial(std::span<const double> state, InitialState which,
                                      const ObservationTemplate& tmpl);
std::vector<double> adjoint_map_initial(const ObservationSeries& obs, InitialState which,
                                        const ObservationTemplate& tmpl);

struct Regularization {
  /// Tikhonov weight; defaults to 1e-8 * |A^T d|_inf.
  std::optional<double> tikhonov_weight;
  /// Stop by the discrepancy principle |A f - d| <= tau * noise norm when the
  /// observation declares noise.
  double tau = 1.1;
  int cap = 400;
  /// Relative tolerance on the normal-equation residual.
  double rtol = 1e-9;
};

struct ReconstructionResult {
  std::vector<double> estimate;
  int iterations = 0;
  double discrepancy = 0.0;      // |A f - d|
  double regularization = 0.0;   // Tikhonov weight used
  std::string stopping_rule;     // "residual", "discrepancy", "zero-data" or "cap"
  bool converged = false;
  std::vector<double> residual_history;  // sqrt(|A f - d|^2 + gamma |f|^2) per iterate
  std::optional<double> relative_error;  // vs truth, L2 (H1 for u0)
};

ReconstructionResult reconstruct_source(const ObservationSeries& obs, const SourceFactor& factor,
                                        const ObservationTemplate& tmpl, const Regularization& reg,
                                        std::optional<std::vector<double>> truth = std::nullopt);

ReconstructionResult reconstruct_initial(const ObservationSeries& obs, const ObservationTemplate& tmpl,
                                         InitialState which, const Regularization& reg,
                                         std::optional<std::vector<double>> truth = std::nullopt);

/// Relative L2 gap between d_t v(., 0) and R(., 0) f on interior nodes.
double bk_consistency(const FieldHistory& v, const SourceFactor& factor, std::span<const double> f);

/// Adds Gaussian noise rescaled so its Euclidean norm is level * |obs|.
ObservationSeries add_noise(const ObservationSeries& obs, double level, std::uint64_t seed);

double relative_l2_error(std::span<const double> estimate, std::span<const double> truth, double h);
double relative_h1_error(std::span<const double> estimate, std::span<const double> truth, double h);
double l2_norm(std::span<const double> v, double h);

/// Truncated sine series sum_k c_k sin(k pi (x - a)/(b - a)) / k^2 with
/// uniform c_k in [-1, 1].
std::vector<double> random_smooth_profile(const Mesh& mesh, std::uint64_t seed, int modes = 8);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

enum class ProbeTarget { Source, U1 };

struct ProbeConfig {
  int n_draws = 10;
  std::vector<double> noise_ladder{0.0};
  std::uint64_t seed = 0;
  ProbeTarget target = ProbeTarget::Source;
  Regularization reg;
};

struct ProbeRow {
  int draw = 0;
  double noise = 0.0;
  double truth_norm = 0.0;
  double obs_norm = 0.0;
  double rec_error = 0.0;  // relative L2 error
  double ratio = 0.0;      // truth_norm / obs_norm
};

/// Empirical stability constants: random smooth unknowns, their clean
/// observation norms and reconstruction errors across the noise ladder.
/// The factor is only used for the source target.
std::vector<ProbeRow> stability_probe(const ObservationTemplate& tmpl, const SourceFactor& factor,
                                      const ProbeConfig& config);

}  // namespace fracwave
