#include "fracwave/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracwave/error.hpp"

namespace fracwave {

namespace {

constexpr double kBetaMargin = 1.05;
constexpr double kBetaCap = 0.99;

std::vector<double> uniform_nodes(double a, double b, int n) {
  std::vector<double> x(static_cast<std::size_t>(n) + 1);
  const double h = (b - a) / n;
  for (int i = 0; i <= n; ++i) x[static_cast<std::size_t>(i)] = a + h * i;
  x.back() = b;
  return x;
}

void check_axis(double a, double b, int n, const char* name) {
  require(std::isfinite(a) && std::isfinite(b), std::string("mesh bounds must be finite on axis ") + name);
  require(a < b, std::string("mesh requires lower < upper on axis ") + name);
  require(n >= 2, std::string("mesh requires at least 2 cells on axis ") + name);
}

double dot(Point p, Point q) { return p.x * q.x + p.y * q.y; }
Point minus(Point p, Point q) { return {p.x - q.x, p.y - q.y}; }

}  // namespace

Mesh Mesh::interval(double a, double b, int n_cells) {
  check_axis(a, b, n_cells, "x");
  Mesh m;
  m.dim_ = 1;
  m.lower_ = {a, 0.0};
  m.upper_ = {b, 0.0};
  m.n_cells_ = {n_cells, 0};
  m.nodes_[0] = uniform_nodes(a, b, n_cells);
  return m;
}

Mesh Mesh::rectangle(Point lower, Point upper, int nx, int ny) {
  check_axis(lower.x, upper.x, nx, "x");
  check_axis(lower.y, upper.y, ny, "y");
  Mesh m;
  m.dim_ = 2;
  m.lower_ = lower;
  m.upper_ = upper;
  m.n_cells_ = {nx, ny};
  m.nodes_[0] = uniform_nodes(lower.x, upper.x, nx);
  m.nodes_[1] = uniform_nodes(lower.y, upper.y, ny);
  return m;
}

double Mesh::spacing(int axis) const {
  const double lo = axis == 0 ? lower_.x : lower_.y;
  const double hi = axis == 0 ? upper_.x : upper_.y;
  return (hi - lo) / n_cells_[axis];
}

bool Mesh::closure_contains(Point p) const {
  const bool in_x = p.x >= lower_.x && p.x <= upper_.x;
  if (dim_ == 1) return in_x;
  return in_x && p.y >= lower_.y && p.y <= upper_.y;
}

std::string to_string(Side side) {
  switch (side) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
  }
  return "?";
}

bool BoundaryPatch::contains(Side side) const {
  return std::any_of(faces.begin(), faces.end(), [side](const BoundaryFace& f) { return f.side == side; });
}

std::vector<std::string> BoundaryPatch::face_names() const {
  std::vector<std::string> names;
  names.reserve(faces.size());
  for (const auto& f : faces) names.push_back(to_string(f.side));
  return names;
}

BoundaryPatch full_boundary(const Mesh& mesh) {
  BoundaryPatch patch;
  const auto xs = mesh.nodes(0);
  if (mesh.dim() == 1) {
    patch.faces.push_back({Side::Left, {-1.0, 0.0}, {{xs.front(), 0.0}}, 0});
    patch.faces.push_back({Side::Right, {1.0, 0.0}, {{xs.back(), 0.0}}, xs.size() - 1});
    return patch;
  }
  const auto ys = mesh.nodes(1);
  BoundaryFace left{Side::Left, {-1.0, 0.0}, {}, 0};
  BoundaryFace right{Side::Right, {1.0, 0.0}, {}, 0};
  for (double y : ys) {
    left.points.push_back({xs.front(), y});
    right.points.push_back({xs.back(), y});
  }
  BoundaryFace bottom{Side::Bottom, {0.0, -1.0}, {}, 0};
  BoundaryFace top{Side::Top, {0.0, 1.0}, {}, 0};
  for (double x : xs) {
    bottom.points.push_back({x, ys.front()});
    top.points.push_back({x, ys.back()});
  }
  patch.faces = {std::move(left), std::move(right), std::move(bottom), std::move(top)};
  return patch;
}

BoundaryPatch single_face(const Mesh& mesh, Side side) {
  BoundaryPatch all = full_boundary(mesh);
  BoundaryPatch out;
  for (auto& f : all.faces) {
    if (f.side == side) out.faces.push_back(std::move(f));
  }
  require(!out.faces.empty(), "mesh has no face named " + to_string(side));
  return out;
}

BoundaryPatch gamma0_from_x0(const Mesh& mesh, Point x0) {
  require(!mesh.closure_contains(x0), "observation point x0 must lie outside the closed domain");
  BoundaryPatch all = full_boundary(mesh);
  BoundaryPatch out;
  for (auto& face : all.faces) {
    const bool any = std::any_of(face.points.begin(), face.points.end(), [&](Point p) {
      return dot(minus(p, x0), face.normal) >= 0.0;
    });
    if (any) out.faces.push_back(std::move(face));
  }
  return out;
}

double beta_lower_bound(double d0, double d1, double T) {
  return 2.0 * (d1 * d1 - d0 * d0) / (T * T);
}

ObsGeometry observation_geometry(const Mesh& mesh, Point x0, double T) {
  require(!mesh.closure_contains(x0), "observation point x0 must lie outside the closed domain");
  require(std::isfinite(T) && T > 0.0, "observation horizon T must be positive");

  const Point lo = mesh.lower();
  const Point hi = mesh.upper();
  // Nearest point: clamp onto the box. Farthest point: the opposite corner.
  const double px = std::clamp(x0.x, lo.x, hi.x);
  double d0_sq = (x0.x - px) * (x0.x - px);
  double fx = std::max(std::abs(x0.x - lo.x), std::abs(x0.x - hi.x));
  double d1_sq = fx * fx;
  if (mesh.dim() == 2) {
    const double py = std::clamp(x0.y, lo.y, hi.y);
    d0_sq += (x0.y - py) * (x0.y - py);
    const double fy = std::max(std::abs(x0.y - lo.y), std::abs(x0.y - hi.y));
    d1_sq += fy * fy;
  }

  ObsGeometry g;
  g.x0 = x0;
  g.d0 = std::sqrt(d0_sq);
  g.d1 = std::sqrt(d1_sq);
  g.T0 = std::sqrt(2.0 * (d1_sq - d0_sq));
  g.T = T;
  const double beta = kBetaMargin * beta_lower_bound(g.d0, g.d1, T);
  if (T <= g.T0 || beta >= kBetaCap) {
    std::ostringstream msg;
    msg << "observation time too short: T = " << T << " but beta*T^2 >= 2(d1^2 - d0^2) with beta < 1 "
        << "needs T > T0 = " << g.T0 << " (with margin, beta would be " << beta << ")";
    throw PreconditionError(msg.str());
  }
  g.beta = std::min(kBetaCap, beta);
  return g;
}

}  // namespace fracwave
