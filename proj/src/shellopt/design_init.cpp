#include "shellopt/design_init.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace shellopt {

namespace {

double signed_distance(const InitShape& s, const Vec3& p) {
  switch (s.kind) {
    case InitShape::Kind::kPlane:
      return s.z0 - p.z();
    case InitShape::Kind::kDome:
      return s.radius - (p - s.center).norm();
    case InitShape::Kind::kCylinder: {
      Vec3 d = p - s.center;
      d[s.axis] = 0.0;
      return s.radius - d.norm();
    }
  }
  return 0.0;
}

// Deterministic coefficients in [-1, 1]; maps raw mt19937 words directly so
// the values do not depend on the standard library's distribution internals.
std::vector<double> mode_coefficients(uint32_t seed, int count) {
  std::mt19937 rng(seed);
  std::vector<double> c(static_cast<size_t>(count), 0.0);
  for (double& v : c) v = double(rng()) / 2147483648.0 - 1.0;
  return c;
}

}  // namespace

NodalField init_design(const RegularGrid& grid, const InitShape& shape) {
  if (!(shape.d_norm > 0.0))
    throw ConfigError("init_design: d_norm must be positive");

  const int n = grid.node_count();
  NodalField psi(n);
  for (int i = 0; i < n; ++i) {
    const double sd = signed_distance(shape, grid.node_pos(i));
    psi[i] = std::clamp(sd / shape.d_norm, -1.0, 1.0);
  }

  if (shape.perturb_amplitude > 0.0 && shape.perturb_modes > 0) {
    const int m = shape.perturb_modes;
    const auto coeff = mode_coefficients(shape.perturb_seed, m * m);
    NodalField bump = NodalField::Zero(n);
    const Vec3 o = grid.origin();
    const Vec3 ext = grid.extents();
    for (int i = 0; i < n; ++i) {
      const Vec3 p = grid.node_pos(i);
      const double sx = (p.x() - o.x()) / ext.x();
      const double sy = (p.y() - o.y()) / ext.y();
      double v = 0.0;
      for (int a = 1; a <= m; ++a)
        for (int b = 1; b <= m; ++b)
          v += coeff[size_t((a - 1) * m + (b - 1))] *
               std::sin(a * M_PI * sx) * std::sin(b * M_PI * sy);
      bump[i] = v;
    }
    const double peak = bump.cwiseAbs().maxCoeff();
    if (peak > 0.0) {
      psi += (shape.perturb_amplitude / peak) * bump;
      psi = psi.cwiseMax(-1.0).cwiseMin(1.0);
    }
  }

  if (psi.minCoeff() >= 0.0 || psi.maxCoeff() <= 0.0) {
    throw ConfigError(
        "init_design: the preset surface does not intersect the design "
        "domain (the seed field has no sign change)");
  }
  return psi;
}

}  // namespace shellopt
