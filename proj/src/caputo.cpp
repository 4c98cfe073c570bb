#include "fracwave/caputo.hpp"

#include <algorithm>
#include <cmath>

#include "fracwave/error.hpp"

namespace fracwave {

namespace {

void check_order(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, "Caputo order must lie in (0, 1)");
}

void check_step(double dt) { require(std::isfinite(dt) && dt > 0.0, "time step must be positive"); }

double l1_b(double alpha, std::size_t k) {
  const double e = 1.0 - alpha;
  const double kk = static_cast<double>(k);
  return std::pow(kk + 1.0, e) - (k == 0 ? 0.0 : std::pow(kk, e));
}

}  // namespace

L1Weights l1_weights(double alpha, double dt, std::size_t n) {
  check_order(alpha);
  check_step(dt);
  L1Weights w;
  w.prefactor = std::pow(dt, -alpha) / std::tgamma(2.0 - alpha);
  w.b.resize(n);
  for (std::size_t k = 0; k < n; ++k) w.b[k] = l1_b(alpha, k);
  return w;
}

double caputo_apply(std::span<const double> history, double alpha, double dt) {
  require(history.size() >= 2, "Caputo history needs at least two samples");
  const std::size_t n = history.size() - 1;
  const L1Weights w = l1_weights(alpha, dt, n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += w.b[k] * (history[n - k] - history[n - k - 1]);
  return w.prefactor * acc;
}

double caputo_monomial_reference(int p, double alpha, double t) {
  check_order(alpha);
  require(p >= 0, "monomial degree must be nonnegative");
  require(t >= 0.0, "monomial reference needs t >= 0");
  if (p == 0) return 0.0;
  return std::tgamma(p + 1.0) / std::tgamma(p + 1.0 - alpha) * std::pow(t, p - alpha);
}

GammaMinimum gamma_minimum_on_1_2() {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 1.0;
  double hi = 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = std::tgamma(c);
  double fd = std::tgamma(d);
  while (hi - lo > 1e-12) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = std::tgamma(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = std::tgamma(d);
    }
  }
  const double x = 0.5 * (lo + hi);
  return {x, std::tgamma(x)};
}

CaputoOperator::CaputoOperator(std::vector<double> alpha, double alpha1, double dt, std::size_t max_steps)
    : alpha_(std::move(alpha)), alpha1_(alpha1), dt_(dt), max_steps_(max_steps) {
  require(!alpha_.empty(), "Caputo operator needs at least one node");
  check_step(dt);
  require(alpha1 > 0.0 && alpha1 < 1.0, "alpha1 must lie in (0, 1)");
  for (double a : alpha_) {
    check_order(a);
    require(a <= alpha1, "Caputo order exceeds the declared bound alpha1");
  }
  weights_ = Field2D(max_steps_, alpha_.size());
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    const L1Weights w = l1_weights(alpha_[i], dt, max_steps_);
    for (std::size_t k = 0; k < max_steps_; ++k) weights_(k, i) = w.prefactor * w.b[k];
  }
}

void CaputoOperator::apply(const Field2D& increments, std::size_t n, std::span<double> out) const {
  require(n <= max_steps_, "Caputo level beyond the precomputed weight table");
  require(increments.rows() > n && increments.cols() == alpha_.size() && out.size() == alpha_.size(),
          "Caputo increments have the wrong shape");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto w = weights_.row(k);
    const auto d = increments.row(n - k);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[i] * d[i];
  }
}

Field2D CaputoOperator::apply_history(const Field2D& u) const {
  require(u.cols() == alpha_.size(), "history width does not match the Caputo operator");
  const std::size_t levels = u.rows();
  Field2D inc(levels, u.cols());
  for (std::size_t m = 1; m < levels; ++m) {
    for (std::size_t i = 0; i < u.cols(); ++i) inc(m, i) = u(m, i) - u(m - 1, i);
  }
  Field2D out(levels, u.cols());
  for (std::size_t n = 1; n < levels; ++n) apply(inc, n, out.row(n));
  return out;
}

}  // namespace fracwave
