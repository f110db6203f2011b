#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "shellopt/common.hpp"

namespace shellopt {

// Axis-aligned box, used for boundary tagging, supports and loads.
struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool contains(const Vec3& p, double tol = 0.0) const {
    return p.x() >= lo.x() - tol && p.x() <= hi.x() + tol &&
           p.y() >= lo.y() - tol && p.y() <= hi.y() + tol &&
           p.z() >= lo.z() - tol && p.z() <= hi.z() + tol;
  }
};

// Uniform node-centered grid over an axis-aligned design domain.
//
// Nodes are spaced `h` apart in all three axes; the extents must be integer
// multiples of `h`. Every cubic cell is split into the six Kuhn tetrahedra
// around the main diagonal (local corner 0 -> corner 7). Using the same
// diagonal in every cell makes the induced triangulations of shared cell
// faces identical, so isosurface extraction is conforming across cells.
class RegularGrid {
public:
  RegularGrid(const Vec3& origin, const Vec3& extents, double spacing);

  double spacing() const { return h_; }
  const Vec3& origin() const { return origin_; }
  const Vec3& extents() const { return extents_; }

  int nx() const { return n_[0]; }
  int ny() const { return n_[1]; }
  int nz() const { return n_[2]; }
  int node_count() const { return n_[0] * n_[1] * n_[2]; }
  int cell_count() const {
    return (n_[0] - 1) * (n_[1] - 1) * (n_[2] - 1);
  }

  int node_index(int i, int j, int k) const {
    return i + n_[0] * (j + n_[1] * k);
  }
  std::array<int, 3> node_ijk(int idx) const {
    const int i = idx % n_[0];
    const int j = (idx / n_[0]) % n_[1];
    const int k = idx / (n_[0] * n_[1]);
    return {i, j, k};
  }
  Vec3 node_pos(int idx) const {
    const auto ijk = node_ijk(idx);
    return origin_ + h_ * Vec3(ijk[0], ijk[1], ijk[2]);
  }

  int cell_index(int ci, int cj, int ck) const {
    return ci + (n_[0] - 1) * (cj + (n_[1] - 1) * ck);
  }
  std::array<int, 3> cell_ijk(int c) const {
    const int ci = c % (n_[0] - 1);
    const int cj = (c / (n_[0] - 1)) % (n_[1] - 1);
    const int ck = c / ((n_[0] - 1) * (n_[1] - 1));
    return {ci, cj, ck};
  }

  // Node indices of the 8 cell corners, local corner id c = di + 2*dj + 4*dk.
  std::array<int, 8> cell_nodes(int c) const;

  // Number of axes on which a node sits on the domain boundary (0..3).
  int boundary_axis_count(int idx) const;
  bool on_boundary(int idx) const { return boundary_axis_count(idx) > 0; }

  // Trapezoidal integration weight of a node: h^3 scaled by 1/2 per
  // boundary axis. Summing weight(i) over all nodes gives the domain volume.
  double weight(int idx) const {
    return h3_ / double(1 << boundary_axis_count(idx));
  }

  // Six positively oriented Kuhn tetrahedra per cell, as local corner ids.
  static constexpr int kTetsPerCell = 6;
  static const std::array<std::array<int, 4>, 6> kTetCorners;

  std::array<int, 4> tet_nodes(int cell, int t) const {
    const auto corners = cell_nodes(cell);
    const auto& loc = kTetCorners[size_t(t)];
    return {corners[size_t(loc[0])], corners[size_t(loc[1])],
            corners[size_t(loc[2])], corners[size_t(loc[3])]};
  }

private:
  Vec3 origin_;
  Vec3 extents_;
  double h_;
  double h3_;
  std::array<int, 3> n_;
};

// Per-node boundary classification for one grid.
struct BoundaryTag {
  std::vector<uint8_t> on_domain_boundary;  // node lies on any face of D
  std::vector<uint8_t> on_dirichlet;        // node belongs to Gamma_D

  int dirichlet_count() const;
};

// Tags nodes on the domain boundary and, among those, the ones inside any of
// the given Gamma_D boxes (expanded by 1e-9*h). Boxes reaching into the
// interior only tag boundary nodes: Gamma_D is a subset of the boundary.
BoundaryTag tag_boundary(const RegularGrid& grid,
                         const std::vector<Box>& dirichlet_boxes);

}  // namespace shellopt
