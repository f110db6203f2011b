#include <doctest.h>

#include "shellopt/design_init.hpp"
#include "shellopt/grid.hpp"

using namespace shellopt;

namespace {

InitShape plane_at(double z0, double band = 0.1) {
  InitShape s;
  s.kind = InitShape::Kind::kPlane;
  s.z0 = z0;
  s.d_norm = band;
  return s;
}

}  // namespace

TEST_CASE("plane seed is the clamped normalized height difference") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.2, 0.2, 0.4), 0.05);
  const NodalField psi = init_design(grid, plane_at(0.2, 0.1));

  for (int i = 0; i < grid.node_count(); ++i) {
    const double z = grid.node_pos(i).z();
    const double expect = std::clamp((0.2 - z) / 0.1, -1.0, 1.0);
    CHECK(psi[i] == doctest::Approx(expect).epsilon(1e-12));
  }
  // Positive below the plane (that side is enclosed), negative above.
  CHECK(psi[grid.node_index(0, 0, 0)] == doctest::Approx(1.0));
  CHECK(psi[grid.node_index(0, 0, grid.nz() - 1)] == doctest::Approx(-1.0));
  CHECK(psi[grid.node_index(1, 1, 4)] == doctest::Approx(0.0));

  // Narrower band scales the slope.
  const NodalField tight = init_design(grid, plane_at(0.2, 0.05));
  CHECK(tight[grid.node_index(0, 0, 3)] == doctest::Approx(1.0));  // z = 0.15
}

TEST_CASE("dome seed is positive inside the sphere and clamps far away") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.4, 0.4, 0.4), 0.05);
  InitShape s;
  s.kind = InitShape::Kind::kDome;
  s.center = Vec3(0.2, 0.2, 0.0);
  s.radius = 0.15;
  s.d_norm = 0.1;
  const NodalField psi = init_design(grid, s);

  CHECK(psi[grid.node_index(4, 4, 0)] == doctest::Approx(1.0));   // center
  CHECK(psi[grid.node_index(4, 4, 3)] == doctest::Approx(0.0));   // on sphere
  CHECK(psi[grid.node_index(0, 0, 8)] == doctest::Approx(-1.0));  // far corner
  const double d = (grid.node_pos(grid.node_index(4, 4, 4)) - s.center).norm();
  CHECK(psi[grid.node_index(4, 4, 4)] ==
        doctest::Approx((0.15 - d) / 0.1).epsilon(1e-12));
}

TEST_CASE("cylinder seed ignores the axial coordinate") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.4, 0.4, 0.4), 0.1);
  InitShape s;
  s.kind = InitShape::Kind::kCylinder;
  s.center = Vec3(0.0, 0.2, 0.2);
  s.radius = 0.15;
  s.axis = 0;
  s.d_norm = 0.1;
  const NodalField psi = init_design(grid, s);

  for (int i = 0; i <= 4; ++i) {
    CHECK(psi[grid.node_index(i, 2, 2)] == doctest::Approx(1.0));  // on axis
    const double expect = std::clamp((0.15 - 0.2) / 0.1, -1.0, 1.0);
    CHECK(psi[grid.node_index(i, 0, 2)] == doctest::Approx(expect));
  }
}

TEST_CASE("seeds that never change sign are rejected") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.2, 0.2, 0.2), 0.1);
  CHECK_THROWS_AS(init_design(grid, plane_at(5.0)), ConfigError);   // all +
  CHECK_THROWS_AS(init_design(grid, plane_at(-5.0)), ConfigError);  // all -

  InitShape s;
  s.kind = InitShape::Kind::kDome;
  s.center = Vec3(0.1, 0.1, 0.1);
  s.radius = 10.0;
  s.d_norm = 0.1;
  CHECK_THROWS_AS(init_design(grid, s), ConfigError);

  InitShape bad = plane_at(0.1);
  bad.d_norm = 0.0;
  CHECK_THROWS_AS(init_design(grid, bad), ConfigError);
}

TEST_CASE("seed perturbation is deterministic and amplitude-bounded") {
  const RegularGrid grid(Vec3::Zero(), Vec3(1.0, 1.0, 0.5), 0.05);
  InitShape base = plane_at(0.25);
  const NodalField flat = init_design(grid, base);

  InitShape pert = base;
  pert.perturb_amplitude = 0.1;
  pert.perturb_modes = 3;
  pert.perturb_seed = 7;
  const NodalField a = init_design(grid, pert);
  const NodalField b = init_design(grid, pert);
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);  // bitwise repeatable

  const double dev = (a - flat).lpNorm<Eigen::Infinity>();
  CHECK(dev > 0.01);
  CHECK(dev <= 0.1 + 1e-12);  // clamped peak normalization
  CHECK(a.minCoeff() >= -1.0);
  CHECK(a.maxCoeff() <= 1.0);

  pert.perturb_seed = 8;
  const NodalField c = init_design(grid, pert);
  CHECK((a - c).lpNorm<Eigen::Infinity>() > 1e-6);

  pert.perturb_amplitude = 0.0;
  pert.perturb_seed = 7;
  const NodalField d = init_design(grid, pert);
  CHECK((d - flat).lpNorm<Eigen::Infinity>() == 0.0);
}
