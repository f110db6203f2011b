#include "shellopt/grid.hpp"

#include <cmath>

namespace shellopt {

namespace {

// Rounds extent/h to the nearest integer and checks it is a clean multiple.
int node_count_along(double extent, double h, int axis) {
  const double cells = extent / h;
  const long long n = std::llround(cells);
  if (n < 1 || std::abs(cells - double(n)) > 1e-9 * std::max(1.0, cells)) {
    throw ConfigError("grid extent along axis " + std::to_string(axis) +
                      " (" + std::to_string(extent) +
                      ") is not an integer multiple of the spacing " +
                      std::to_string(h));
  }
  return int(n) + 1;
}

}  // namespace

// Each row is one path 0 -> 7 adding one axis at a time (the Kuhn
// subdivision); rows with odd permutation parity have their middle corners
// swapped so every tetrahedron is positively oriented.
const std::array<std::array<int, 4>, 6> RegularGrid::kTetCorners = {{
    {0, 1, 3, 7},  // +x +y +z
    {0, 5, 1, 7},  // +x +z +y
    {0, 3, 2, 7},  // +y +x +z
    {0, 2, 6, 7},  // +y +z +x
    {0, 4, 5, 7},  // +z +x +y
    {0, 6, 4, 7},  // +z +y +x
}};

RegularGrid::RegularGrid(const Vec3& origin, const Vec3& extents,
                         double spacing)
    : origin_(origin), extents_(extents), h_(spacing), h3_(spacing * spacing * spacing) {
  if (!(spacing > 0.0)) throw ConfigError("grid spacing must be positive");
  for (int a = 0; a < 3; ++a) {
    if (!(extents[a] > 0.0))
      throw ConfigError("grid extents must be positive");
    n_[size_t(a)] = node_count_along(extents[a], spacing, a);
  }
}

std::array<int, 8> RegularGrid::cell_nodes(int c) const {
  const auto ijk = cell_ijk(c);
  std::array<int, 8> out;
  for (int corner = 0; corner < 8; ++corner) {
    out[size_t(corner)] = node_index(ijk[0] + (corner & 1), ijk[1] + ((corner >> 1) & 1),
                                     ijk[2] + ((corner >> 2) & 1));
  }
  return out;
}

int RegularGrid::boundary_axis_count(int idx) const {
  const auto ijk = node_ijk(idx);
  int b = 0;
  for (int a = 0; a < 3; ++a) {
    if (ijk[size_t(a)] == 0 || ijk[size_t(a)] == n_[size_t(a)] - 1) ++b;
  }
  return b;
}

int BoundaryTag::dirichlet_count() const {
  int n = 0;
  for (uint8_t d : on_dirichlet) n += d;
  return n;
}

BoundaryTag tag_boundary(const RegularGrid& grid,
                         const std::vector<Box>& dirichlet_boxes) {
  const int n = grid.node_count();
  BoundaryTag tag;
  tag.on_domain_boundary.assign(size_t(n), 0);
  tag.on_dirichlet.assign(size_t(n), 0);
  const double tol = 1e-9 * grid.spacing();
  for (int i = 0; i < n; ++i) {
    if (!grid.on_boundary(i)) continue;
    tag.on_domain_boundary[size_t(i)] = 1;
    const Vec3 p = grid.node_pos(i);
    for (const Box& box : dirichlet_boxes) {
      if (box.contains(p, tol)) {
        tag.on_dirichlet[size_t(i)] = 1;
        break;
      }
    }
  }
  return tag;
}

}  // namespace shellopt
