#pragma once

#include <Eigen/Sparse>
#include <array>
#include <vector>

#include "shellopt/common.hpp"
#include "shellopt/grid.hpp"
#include "shellopt/isosurface.hpp"

namespace shellopt {

struct Material {
  double youngs = 1.0;
  double poisson = 0.3;
};

struct ElementOptions {
  // Replace the displacement-derived transverse shear by the constant
  // edge-tied assumed field. Off only for the locking regression test.
  bool assumed_shear = true;
  double shear_correction = 5.0 / 6.0;
  // Penalty stiffness (times E*t*area) against the rotation component about
  // the element normal. With node frames orthogonal to the directors that
  // component only appears when directors tilt away from the element normal,
  // so the penalty vanishes identically on flat patches.
  double drill_scale = 1e-6;
};

// Everything the element integration needs: vertex positions, unit fiber
// directors, and the per-node tangent frames (t1, t2, director) that carry
// the two rotation degrees of freedom.
struct ElementGeom {
  std::array<Vec3, 3> x;
  std::array<Vec3, 3> director;
  std::array<Vec3, 3> t1;
  std::array<Vec3, 3> t2;
};

using ElemMat = Eigen::Matrix<double, 15, 15>;
using ElemVec = Eigen::Matrix<double, 15, 1>;

// 15x15 stiffness of the 3-node curved-director shell element: linear
// in-plane interpolation, two-point thickness integration of the covariant
// strain energy, tied transverse shear, and the drill penalty above.
// 5 DoF per node: 3 global translations, 2 rotations about (t1, t2).
ElemMat element_stiffness(const ElementGeom& geom, const Material& mat,
                          double thickness, const ElementOptions& opts);

// Cartesian strain tensor at parametric point (r, s, zeta) for displacement
// q, from the displacement-derived covariant strains (no tying). Used by the
// patch test and strain probes.
Eigen::Matrix3d element_strain(const ElementGeom& geom, double thickness,
                               const ElemVec& q, double r, double s,
                               double zeta);

// Builds orthonormal tangent frames for a director using the
// smallest-component trick; t1 x t2 = director.
void director_frame(const Vec3& director, Vec3& t1, Vec3& t2);

struct FeResult {
  Eigen::VectorXd displacement;        // 5 per vertex
  Eigen::VectorXd load;                // assembled external load
  double compliance = 0.0;             // total strain energy 1/2 u^T K u
  double external_work = 0.0;          // 1/2 f^T u
  std::vector<double> element_energy;  // per triangle
};

// One finite element model on an extracted (or hand-built) shell mesh.
// Constraints and loads are attached, then solve() assembles and factors the
// reduced system. All DoF bookkeeping is vertex-major: dof = 5*vertex + c,
// c in {ux, uy, uz, rot_t1, rot_t2}.
class ShellModel {
public:
  ShellModel(const ShellMesh& mesh, const Material& mat, double thickness,
             const ElementOptions& opts = {});

  // Fixes translations (and rotations, for clamps) of vertices inside box.
  void add_support(const Box& box, bool fix_rotations, double tol = 1e-9);

  // Mirror condition on the plane {p[axis] == value}: the normal translation
  // is fixed and the node frame is realigned so t1 lies (almost) along the
  // plane normal; only the rotation about t1 stays free. Vertices sitting on
  // two or more planes lose both rotations.
  void add_symmetry_plane(int axis, double value, double tol);

  // Uniform midsurface load, force per unit area.
  void add_area_load(const Vec3& force_per_area);

  // Total force distributed over the boundary-edge vertices inside the box,
  // weighted by incident boundary edge length (a uniform line load). The
  // per-vertex forces are evaluated on the current geometry and then fixed
  // ("dead"), so they do not contribute shape-derivative terms.
  void add_edge_load(const Box& box, const Vec3& total_force);

  // Prescribes a single DoF (patch tests, imposed-displacement probes).
  void prescribe(int vertex, int component, double value);

  FeResult solve() const;

  // --- pieces shared with the sensitivity routine and tests ---------------
  int vertex_count() const { return int(positions_.size()); }
  int dof_count() const { return 5 * vertex_count(); }
  ElementGeom element_geom(int t) const;
  // Same, with one vertex offset along its director (thickness unchanged).
  ElementGeom element_geom_offset(int t, int vertex, double offset) const;
  ElemMat stiffness(const ElementGeom& g) const {
    return element_stiffness(g, material_, thickness_, options_);
  }
  // Consistent load vector of the registered area loads on this geometry.
  ElemVec area_load_vector(const ElementGeom& g) const;
  ElemVec gather(const Eigen::VectorXd& u, int t) const;
  const std::vector<std::vector<int>>& vertex_elements() const {
    return vtx_elems_;
  }
  bool vertex_fully_fixed(int v) const;
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<Vec3>& directors() const { return directors_; }
  const Material& material() const { return material_; }
  double thickness() const { return thickness_; }

private:
  Material material_;
  double thickness_;
  ElementOptions options_;
  std::vector<Vec3> positions_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Vec3> directors_, t1_, t2_;
  std::vector<std::vector<int>> vtx_elems_;

  std::vector<uint8_t> fixed_;
  std::vector<double> prescribed_;
  std::vector<Vec3> area_loads_;
  Eigen::VectorXd dead_loads_;
  std::vector<int> symmetry_plane_count_;

  // Boundary edges of the mesh (vertex pairs), for edge loads.
  std::vector<std::pair<int, int>> boundary_edges_;
};

}  // namespace shellopt
