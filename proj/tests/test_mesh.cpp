#include <cmath>

#include "doctest.h"
#include "fracwave/error.hpp"
#include "fracwave/mesh.hpp"

using namespace fracwave;

TEST_CASE("interval nodes are a uniform partition") {
  const Mesh m = Mesh::interval(0.0, 1.0, 4);
  REQUIRE(m.node_count() == 5);
  const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i < 5; ++i) CHECK(m.nodes()[i] == doctest::Approx(expected[i]).epsilon(1e-15));
  CHECK(Mesh::interval(0.0, 1.0, 200).spacing() == doctest::Approx(0.005).epsilon(1e-14));
  const Mesh sym = Mesh::interval(-1.0, 1.0, 2);
  CHECK(sym.nodes()[0] == -1.0);
  CHECK(sym.nodes()[1] == 0.0);
  CHECK(sym.nodes()[2] == 1.0);
}

TEST_CASE("interval construction rejects bad input") {
  CHECK_THROWS_AS(Mesh::interval(1.0, 0.0, 4), PreconditionError);
  CHECK_THROWS_AS(Mesh::interval(0.0, 1.0, 1), PreconditionError);
  CHECK_THROWS_AS(Mesh::interval(0.0, INFINITY, 4), PreconditionError);
}

TEST_CASE("gamma0 follows the sign of (x - x0) . nu") {
  const Mesh line = Mesh::interval(0.0, 1.0, 10);
  const BoundaryPatch right = gamma0_from_x0(line, {-1.0, 0.0});
  REQUIRE(right.faces.size() == 1);
  CHECK(right.faces[0].side == Side::Right);
  CHECK(right.faces[0].node_index == 10);

  const BoundaryPatch left = gamma0_from_x0(line, {2.0, 0.0});
  REQUIRE(left.faces.size() == 1);
  CHECK(left.faces[0].side == Side::Left);

  const Mesh square = Mesh::rectangle({0.0, 0.0}, {1.0, 1.0}, 8, 8);
  const BoundaryPatch p = gamma0_from_x0(square, {-1.0, 0.5});
  CHECK(p.faces.size() == 3);
  CHECK(p.contains(Side::Right));
  CHECK(p.contains(Side::Top));
  CHECK(p.contains(Side::Bottom));
  CHECK_FALSE(p.contains(Side::Left));

  // Excluded faces are strictly negative at every sample point.
  const BoundaryPatch all = full_boundary(square);
  for (const auto& face : all.faces) {
    double best = -INFINITY;
    for (const Point& x : face.points) {
      best = std::max(best, (x.x + 1.0) * face.normal.x + (x.y - 0.5) * face.normal.y);
    }
    CHECK(p.contains(face.side) == (best >= 0.0));
    CHECK(std::hypot(face.normal.x, face.normal.y) == doctest::Approx(1.0));
  }

  CHECK_THROWS_AS(gamma0_from_x0(line, {0.5, 0.0}), PreconditionError);
  CHECK_THROWS_AS(gamma0_from_x0(line, {1.0, 0.0}), PreconditionError);
}

TEST_CASE("observation geometry for the unit interval") {
  const Mesh line = Mesh::interval(0.0, 1.0, 10);
  const ObsGeometry g = observation_geometry(line, {-1.0, 0.0}, 3.0);
  CHECK(g.d0 == doctest::Approx(1.0));
  CHECK(g.d1 == doctest::Approx(2.0));
  CHECK(g.T0 == doctest::Approx(std::sqrt(6.0)));
  CHECK(g.beta == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(g.beta * 9.0 >= 2.0 * (g.d1 * g.d1 - g.d0 * g.d0));

  CHECK_THROWS_AS(observation_geometry(line, {-1.0, 0.0}, 2.0), PreconditionError);
  // Just above T0 the 5% margin would push beta past the cap.
  CHECK_THROWS_AS(observation_geometry(line, {-1.0, 0.0}, 2.5), PreconditionError);

  const ObsGeometry far = observation_geometry(line, {-1.0, 0.0}, 100.0);
  CHECK(far.beta == doctest::Approx(1.05 * 6.0 / 1e4));
  CHECK(beta_lower_bound(1.0, 2.0, 3.0) == doctest::Approx(6.0 / 9.0));
}

TEST_CASE("rectangle distances use the projection and the farthest corner") {
  const Mesh square = Mesh::rectangle({0.0, 0.0}, {1.0, 1.0}, 4, 4);
  const ObsGeometry g = observation_geometry(square, {-1.0, 0.5}, 10.0);
  CHECK(g.d0 == doctest::Approx(1.0));
  CHECK(g.d1 == doctest::Approx(std::hypot(2.0, 0.5)));
  CHECK(g.d0 > 0.0);

  // Enlarging the domain never decreases d1 nor increases d0.
  const Mesh small = Mesh::interval(0.0, 1.0, 4);
  const Mesh large = Mesh::interval(-0.5, 1.5, 4);
  const ObsGeometry gs = observation_geometry(small, {-1.0, 0.0}, 10.0);
  const ObsGeometry gl = observation_geometry(large, {-1.0, 0.0}, 10.0);
  CHECK(gl.d1 >= gs.d1);
  CHECK(gl.d0 <= gs.d0);
}
