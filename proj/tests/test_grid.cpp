#include <doctest.h>

#include <Eigen/Dense>
#include <array>
#include <set>
#include <vector>

#include "shellopt/grid.hpp"

using namespace shellopt;

TEST_CASE("grid indexing round-trips and node positions are exact") {
  const RegularGrid grid(Vec3(1.0, -2.0, 0.5), Vec3(0.2, 0.3, 0.1), 0.1);
  CHECK(grid.nx() == 3);
  CHECK(grid.ny() == 4);
  CHECK(grid.nz() == 2);
  CHECK(grid.node_count() == 24);
  CHECK(grid.cell_count() == 2 * 3 * 1);

  for (int idx = 0; idx < grid.node_count(); ++idx) {
    const auto ijk = grid.node_ijk(idx);
    CHECK(grid.node_index(ijk[0], ijk[1], ijk[2]) == idx);
  }
  CHECK((grid.node_pos(0) - Vec3(1.0, -2.0, 0.5)).norm() == doctest::Approx(0.0));
  const int last = grid.node_index(2, 3, 1);
  CHECK((grid.node_pos(last) - Vec3(1.2, -1.7, 0.6)).norm() ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("grid constructor rejects bad extents and spacing") {
  CHECK_THROWS_AS(RegularGrid(Vec3::Zero(), Vec3(0.25, 0.1, 0.1), 0.1),
                  ConfigError);
  CHECK_THROWS_AS(RegularGrid(Vec3::Zero(), Vec3(0.2, 0.2, 0.2), 0.0),
                  ConfigError);
  CHECK_THROWS_AS(RegularGrid(Vec3::Zero(), Vec3(0.2, -0.2, 0.2), 0.1),
                  ConfigError);
  // Extents that are clean multiples up to roundoff must be accepted.
  CHECK_NOTHROW(RegularGrid(Vec3::Zero(), Vec3(0.3, 0.3, 0.3), 0.05));
  CHECK_NOTHROW(RegularGrid(Vec3::Zero(), Vec3(0.7, 0.1, 0.1), 0.1));
}

TEST_CASE("trapezoid node weights sum to the domain volume") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.4, 0.3, 0.2), 0.1);
  const double h3 = 0.1 * 0.1 * 0.1;

  // Corner, edge, face and interior samples.
  CHECK(grid.weight(grid.node_index(0, 0, 0)) == doctest::Approx(h3 / 8.0));
  CHECK(grid.weight(grid.node_index(1, 0, 0)) == doctest::Approx(h3 / 4.0));
  CHECK(grid.weight(grid.node_index(1, 1, 0)) == doctest::Approx(h3 / 2.0));
  CHECK(grid.weight(grid.node_index(1, 1, 1)) == doctest::Approx(h3));

  double sum = 0.0;
  for (int i = 0; i < grid.node_count(); ++i) sum += grid.weight(i);
  CHECK(sum == doctest::Approx(0.4 * 0.3 * 0.2).epsilon(1e-12));
}

namespace {

// Barycentric membership test of point p in the tet (a, b, c, d).
bool point_in_tet(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                  const Vec3& d, double tol) {
  Eigen::Matrix3d m;
  m.col(0) = b - a;
  m.col(1) = c - a;
  m.col(2) = d - a;
  const Vec3 lam = m.lu().solve(p - a);
  const double l0 = 1.0 - lam.sum();
  return lam[0] > tol && lam[1] > tol && lam[2] > tol && l0 > tol;
}

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

}  // namespace

TEST_CASE("the six cell tetrahedra are positive, equal-volume and tile the cell") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.1, 0.1, 0.1), 0.1);
  REQUIRE(grid.cell_count() == 1);
  const double h3 = 1e-3;

  std::array<std::array<Vec3, 4>, 6> tets;
  double total = 0.0;
  for (int t = 0; t < RegularGrid::kTetsPerCell; ++t) {
    const auto nodes = grid.tet_nodes(0, t);
    for (int k = 0; k < 4; ++k) tets[t][k] = grid.node_pos(nodes[k]);
    const double vol = tet_volume(tets[t][0], tets[t][1], tets[t][2], tets[t][3]);
    CHECK(vol == doctest::Approx(h3 / 6.0).epsilon(1e-12));  // positive too
    total += vol;
  }
  CHECK(total == doctest::Approx(h3).epsilon(1e-12));

  // Interior sample points must land in exactly one tetrahedron.
  const std::vector<Vec3> samples = {
      {0.013, 0.027, 0.081}, {0.071, 0.019, 0.036}, {0.044, 0.063, 0.052},
      {0.091, 0.088, 0.012}, {0.023, 0.077, 0.069}, {0.058, 0.041, 0.093}};
  for (const Vec3& p : samples) {
    int hits = 0;
    for (const auto& t : tets)
      if (point_in_tet(p, t[0], t[1], t[2], t[3], 1e-12)) ++hits;
    CHECK(hits == 1);
  }
}

namespace {

// Sorted node triples of all tet faces in cell `c` lying on the plane
// {axis == value}.
std::set<std::array<int, 3>> faces_on_plane(const RegularGrid& grid, int c,
                                            int axis, double value) {
  std::set<std::array<int, 3>> out;
  for (int t = 0; t < RegularGrid::kTetsPerCell; ++t) {
    const auto nodes = grid.tet_nodes(c, t);
    for (int skip = 0; skip < 4; ++skip) {
      std::array<int, 3> face;
      int k = 0;
      bool on = true;
      for (int i = 0; i < 4; ++i) {
        if (i == skip) continue;
        if (std::abs(grid.node_pos(nodes[i])[axis] - value) > 1e-12) on = false;
        face[k++] = nodes[i];
      }
      if (!on) continue;
      std::sort(face.begin(), face.end());
      out.insert(face);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("adjacent cells induce the same triangulation on shared faces") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.2, 0.2, 0.2), 0.1);
  REQUIRE(grid.cell_count() == 8);
  // Neighbors along each axis share the mid-plane of the domain.
  const struct {
    int ca, cb, axis;
  } pairs[] = {{grid.cell_index(0, 0, 0), grid.cell_index(1, 0, 0), 0},
               {grid.cell_index(0, 0, 0), grid.cell_index(0, 1, 0), 1},
               {grid.cell_index(0, 0, 0), grid.cell_index(0, 0, 1), 2},
               {grid.cell_index(1, 1, 0), grid.cell_index(1, 1, 1), 2}};
  for (const auto& pr : pairs) {
    const auto fa = faces_on_plane(grid, pr.ca, pr.axis, 0.1);
    const auto fb = faces_on_plane(grid, pr.cb, pr.axis, 0.1);
    CHECK(fa.size() == 2);  // each quad face splits into two triangles
    CHECK(fa == fb);
  }
}

TEST_CASE("boundary tagging marks faces and keeps pins on the boundary") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.2, 0.2, 0.2), 0.1);  // 3x3x3

  SUBCASE("no boxes") {
    const BoundaryTag tags = tag_boundary(grid, {});
    int nb = 0;
    for (uint8_t b : tags.on_domain_boundary) nb += b;
    CHECK(nb == 26);  // all but the center node
    CHECK(tags.dirichlet_count() == 0);
  }

  SUBCASE("face box tags exactly that face") {
    Box top;
    top.lo = Vec3(-1.0, -1.0, 0.2);
    top.hi = Vec3(1.0, 1.0, 0.2);
    const BoundaryTag tags = tag_boundary(grid, {top});
    CHECK(tags.dirichlet_count() == 9);
    for (int i = 0; i < grid.node_count(); ++i) {
      if (!tags.on_dirichlet[i]) continue;
      CHECK(grid.node_pos(i).z() == doctest::Approx(0.2));
      CHECK(tags.on_domain_boundary[i] == 1);
    }
  }

  SUBCASE("a box reaching into the interior only tags boundary nodes") {
    Box deep;
    deep.lo = Vec3(-1.0, -1.0, 0.05);
    deep.hi = Vec3(1.0, 1.0, 0.2);
    const BoundaryTag tags = tag_boundary(grid, {deep});
    // z = 0.2 face (9 nodes) plus the boundary ring at z = 0.1 (8 nodes);
    // the interior node at (0.1, 0.1, 0.1) stays untagged.
    CHECK(tags.dirichlet_count() == 17);
    CHECK(tags.on_dirichlet[grid.node_index(1, 1, 1)] == 0);
  }
}

TEST_CASE("box containment respects the tolerance argument") {
  Box b;
  b.lo = Vec3(0.0, 0.0, 0.0);
  b.hi = Vec3(1.0, 1.0, 0.0);  // degenerate in z
  CHECK(b.contains(Vec3(0.5, 0.5, 0.0)));
  CHECK(!b.contains(Vec3(0.5, 0.5, 1e-6)));
  CHECK(b.contains(Vec3(0.5, 0.5, 1e-6), 1e-5));
  CHECK(!b.contains(Vec3(1.5, 0.5, 0.0), 1e-5));
}
