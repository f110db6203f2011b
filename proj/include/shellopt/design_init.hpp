#pragma once

#include <cstdint>

#include "shellopt/common.hpp"
#include "shellopt/grid.hpp"

namespace shellopt {

// Analytic shape used to seed the design field. The zero level set of the
// returned field is the shape's surface; the field is positive on the
// enclosed side, so the surface normal (direction of decreasing field)
// points away from the enclosed region.
struct InitShape {
  enum class Kind { kPlane, kDome, kCylinder };
  Kind kind = Kind::kPlane;

  double z0 = 0.0;              // plane: height of the flat midsurface
  Vec3 center = Vec3::Zero();   // dome: sphere center; cylinder: axis point
  double radius = 0.0;          // dome / cylinder radius
  int axis = 0;                 // cylinder axis direction (0=x, 1=y, 2=z)

  // Signed distances are divided by d_norm before clamping to [-1, 1].
  double d_norm = 0.1;

  // Optional deterministic perturbation, a sum of sine modes in the first
  // two axes. A flat plate is a stationary point of the compliance flow
  // (offsetting it up or down is symmetric), so without a seed field the
  // plate run would sit still; this plays the role of the asymmetries a
  // general-purpose remesher would introduce.
  double perturb_amplitude = 0.0;
  int perturb_modes = 0;
  uint32_t perturb_seed = 0;
};

// Samples the clamped, normalized signed distance of the shape at every grid
// node. Throws ConfigError if the surface does not cross the design domain.
NodalField init_design(const RegularGrid& grid, const InitShape& shape);

}  // namespace shellopt
