#pragma once

#include <array>
#include <functional>
#include <vector>

#include "shellopt/common.hpp"
#include "shellopt/grid.hpp"

namespace shellopt {

// Triangle mesh of the zero isosurface, with enough bookkeeping to map
// per-vertex surface quantities back onto the grid nodes.
struct ShellMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;  // wound so the geometric normal
                                              // points toward decreasing field
  std::vector<Vec3> normals;                  // unit director per vertex

  // Grid embedding: every vertex lies inside one of the grid tetrahedra and
  // is a convex combination of its 4 nodes with these weights.
  std::vector<std::array<int, 4>> parent_nodes;
  std::vector<Eigen::Vector4d> parent_weights;

  int vertex_count() const { return int(vertices.size()); }
  int triangle_count() const { return int(triangles.size()); }
  double triangle_area(int t) const;
  Vec3 triangle_normal(int t) const;  // unit, in winding orientation
  double total_area() const;
};

// Connectivity / quality summary of a mesh.
struct MeshStats {
  int n_vertices = 0;
  int n_triangles = 0;
  int n_edges = 0;
  int boundary_edges = 0;   // edges with exactly one incident triangle
  int boundary_loops = 0;
  int nonmanifold_edges = 0;  // edges with more than two incident triangles
  int euler_characteristic = 0;
  double total_area = 0.0;
  double min_angle_deg = 0.0;
  double min_edge_length = 0.0;
};

MeshStats mesh_stats(const ShellMesh& mesh);

// Marching tetrahedra over the grid's Kuhn subdivision. Node values with
// |v| < snap_eps * (local value range) are snapped to exact zero first, so
// near-node crossings produce vertices exactly at grid nodes instead of
// slivers. Cut vertices are welded through shared edge keys, which makes the
// surface watertight across cell boundaries. Triangles are oriented with the
// normal toward decreasing field values.
ShellMesh extract_isosurface(const RegularGrid& grid, const NodalField& field,
                             double snap_eps);

struct CleanupStats {
  int collapsed = 0;
  int skipped = 0;  // collapses rejected to protect manifoldness/quality
  int quality_collapsed = 0;
};

// Collapses edges shorter than hmin (and afterwards, shortest edges of
// triangles below the angle floor) into one of their endpoints, so every
// surviving vertex keeps its exact on-surface position and grid embedding.
// Collapses that would break the manifold, flip a triangle, or produce a
// degenerate one are skipped and counted.
CleanupStats cleanup(ShellMesh& mesh, double hmin, double min_angle_deg);

// Gradient of the field at every node: central differences inside, one-sided
// second-order stencils on the boundary (exact for quadratics, so symmetric
// fields get symmetric gradients up to O(h^3) instead of O(h)).
std::vector<Vec3> node_gradients(const RegularGrid& grid,
                                 const NodalField& field);

// Trilinear interpolation of node gradients at an arbitrary point.
Vec3 sample_gradient(const RegularGrid& grid, const std::vector<Vec3>& grads,
                     const Vec3& p);

// Fills mesh.normals with the normalized negative field gradient at each
// vertex; falls back to the area-weighted average of incident triangle
// normals where the gradient vanishes (|grad| < 1e-12) or is so tangent to
// the incident triangles (cosine < 0.17) that the shell element's thickness
// mapping would fold.
void compute_vertex_normals(const RegularGrid& grid, const NodalField& field,
                            ShellMesh& mesh);

// Lumped vertex areas: one third of the incident triangle areas.
std::vector<double> lumped_vertex_areas(const ShellMesh& mesh);

// Splits the mesh into edge-connected components and removes every component
// that has no vertex accepted by `anchored`. A component that reaches no
// support floats freely — its stiffness block is singular — so the analysis
// drops it instead of failing on a rigid-body mode. Unreferenced vertices are
// compacted away. Returns the number of triangles removed.
int drop_unanchored_components(ShellMesh& mesh,
                               const std::function<bool(const Vec3&)>& anchored);

// Collapses triangles that are not transverse to their own vertex directors:
// any triangle where min over its vertices of dot(director, triangle normal)
// falls below cos_floor. Such a triangle does not sample one sheet of the
// surface — it bridges two sheets that are about to touch, with directors
// pulled from opposite sides — and its thickness extrusion folds. Collapsing
// the shortest edge welds the sheets the way a finer remesh would resolve the
// pinch. Requires mesh.normals to be filled; surviving vertices keep their
// positions, directors, and embedding. Returns the number of collapses.
int collapse_folded_triangles(ShellMesh& mesh, double cos_floor);

}  // namespace shellopt
