#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fracwave {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform grid on an interval (dim 1) or an axis-aligned rectangle (dim 2).
/// Only 1-D meshes carry PDE state; 2-D meshes are used for observation
/// geometry.
class Mesh {
 public:
  static Mesh interval(double a, double b, int n_cells);
  static Mesh rectangle(Point lower, Point upper, int nx, int ny);

  int dim() const { return dim_; }
  Point lower() const { return lower_; }
  Point upper() const { return upper_; }
  int n_cells(int axis = 0) const { return n_cells_[axis]; }
  double spacing(int axis = 0) const;
  std::size_t node_count(int axis = 0) const { return static_cast<std::size_t>(n_cells_[axis]) + 1; }

  /// Node coordinates along one axis.
  std::span<const double> nodes(int axis = 0) const { return nodes_[axis]; }

  /// True if p lies in the closed domain (tolerance-free).
  bool closure_contains(Point p) const;

 private:
  int dim_ = 1;
  Point lower_;
  Point upper_;
  std::array<int, 2> n_cells_{0, 0};
  std::array<std::vector<double>, 2> nodes_;
};

enum class Side { Left, Right, Bottom, Top };

std::string to_string(Side side);

struct BoundaryFace {
  Side side;
  Point normal;               // outward, unit length
  std::vector<Point> points;  // boundary nodes lying on this face
  /// 1-D only: index of the endpoint node in the mesh.
  std::size_t node_index = 0;
};

struct BoundaryPatch {
  std::vector<BoundaryFace> faces;

  bool contains(Side side) const;
  std::vector<std::string> face_names() const;
};

/// Every face of the mesh boundary, in the order left, right[, bottom, top].
BoundaryPatch full_boundary(const Mesh& mesh);

/// Patch consisting of a single named face (used for controls and tests).
BoundaryPatch single_face(const Mesh& mesh, Side side);

/// Smallest face-granular patch containing every boundary point with
/// (x - x0) . nu >= 0. Throws PreconditionError when x0 is in the closure.
BoundaryPatch gamma0_from_x0(const Mesh& mesh, Point x0);

struct ObsGeometry {
  Point x0;
  double d0 = 0.0;  // min |x - x0| over the closed domain
  double d1 = 0.0;  // max |x - x0| over the closed domain
  double T0 = 0.0;  // sqrt(2 (d1^2 - d0^2))
  double beta = 0.0;
  double T = 0.0;
};

/// Distances, minimal observation time and the weight parameter beta.
/// beta = 1.05 * 2(d1^2 - d0^2) / T^2, rejected unless it stays below 0.99.
ObsGeometry observation_geometry(const Mesh& mesh, Point x0, double T);

/// Ratio 2(d1^2 - d0^2) / T^2, the smallest admissible beta.
double beta_lower_bound(double d0, double d1, double T);

}  // namespace fracwave
