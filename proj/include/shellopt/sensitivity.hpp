#pragma once

#include "shellopt/common.hpp"
#include "shellopt/grid.hpp"
#include "shellopt/helmholtz.hpp"
#include "shellopt/isosurface.hpp"
#include "shellopt/shell_fem.hpp"

namespace shellopt {

// Per-vertex derivative of the strain energy with respect to a normal offset
// of that vertex (positions move along the director, directors themselves are
// held fixed): dF/dz_I = -1/2 u^T (dK/dz_I) u + u^T (df/dz_I), with the
// element derivatives taken by central differences of step `step` and only
// the elements touching vertex I contributing.
Eigen::VectorXd shape_sensitivity(const ShellModel& model,
                                  const Eigen::VectorXd& u, double step);

// Pushes a per-vertex surface field onto the grid through the extraction
// embedding: node n accumulates scale * value_I * weight_{I,n} * area_I over
// all vertices, where area_I is the lumped vertex area. With
// `divide_by_node_volume` the accumulated value is turned into a volumetric
// density by dividing by the trapezoid node volume, which keeps the update
// magnitude grid-resolution independent.
Eigen::VectorXd embed_on_grid(const RegularGrid& grid, const ShellMesh& mesh,
                              const Eigen::VectorXd& vertex_values,
                              const std::vector<double>& vertex_area,
                              double scale, bool divide_by_node_volume);

// Exact gradient of the enclosed-volume measure with respect to the design
// field: dG/dpsi = W o A^{-1} g, g_i = V_i * H'(filtered_i). `filter` must be
// the plain (unpinned) design filter.
Eigen::VectorXd volume_constraint_gradient(const RegularGrid& grid,
                                           const HelmholtzFilter& filter,
                                           const NodalField& filtered,
                                           double bandwidth);

}  // namespace shellopt
