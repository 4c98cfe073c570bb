#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fracwave/field.hpp"

namespace fracwave {

/// L1 quadrature table for one order: the Caputo value at t_n is
/// prefactor * sum_k b[k] * (u_{n-k} - u_{n-k-1}).
struct L1Weights {
  double prefactor = 0.0;  // dt^{-alpha} / Gamma(2 - alpha)
  std::vector<double> b;   // b_k = (k+1)^{1-alpha} - k^{1-alpha}
};

L1Weights l1_weights(double alpha, double dt, std::size_t n);

/// L1 approximation of the Caputo derivative at the last sample of a
/// uniformly spaced history u(t_0), ..., u(t_n).
double caputo_apply(std::span<const double> history, double alpha, double dt);

/// Exact Caputo derivative of t^p: Gamma(p+1)/Gamma(p+1-alpha) t^{p-alpha}.
double caputo_monomial_reference(int p, double alpha, double t);

struct GammaMinimum {
  double argmin;
  double value;
};

/// Minimum of Gamma on (1, 2), located by golden-section search.
GammaMinimum gamma_minimum_on_1_2();

/// Variable-order Caputo operator on a node set with a fixed time step.
/// Weight tables are built once for up to max_steps levels.
class CaputoOperator {
 public:
  CaputoOperator(std::vector<double> alpha, double alpha1, double dt, std::size_t max_steps);

  std::size_t node_count() const { return alpha_.size(); }
  std::size_t max_steps() const { return max_steps_; }
  double dt() const { return dt_; }
  double alpha1() const { return alpha1_; }
  std::span<const double> alpha() const { return alpha_; }

  /// Combined weights prefactor_i * b_{i,k} for all nodes i at lag k.
  std::span<const double> weights(std::size_t k) const { return weights_.row(k); }

  /// Caputo values at level n from increments, where increments.row(m)
  /// holds u^m - u^{m-1} for m >= 1 (row 0 is ignored).
  void apply(const Field2D& increments, std::size_t n, std::span<double> out) const;

  /// Caputo values at every level of a (levels x nodes) history; level 0 is 0.
  Field2D apply_history(const Field2D& u) const;

 private:
  std::vector<double> alpha_;
  double alpha1_;
  double dt_;
  std::size_t max_steps_;
  Field2D weights_;  // (max_steps x nodes)
};

}  // namespace fracwave
