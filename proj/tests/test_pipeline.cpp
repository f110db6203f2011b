#include <doctest.h>

#include "shellopt/design_init.hpp"
#include "shellopt/grid.hpp"
#include "shellopt/pipeline.hpp"

using namespace shellopt;

TEST_CASE("smoothed step function has the exact quintic values") {
  const double h = 0.5;
  CHECK(heaviside(0.0, h) == 0.5);
  CHECK(heaviside(h, h) == 1.0);
  CHECK(heaviside(-h, h) == 0.0);
  CHECK(heaviside(2.0 * h, h) == 1.0);
  CHECK(heaviside(-7.0 * h, h) == 0.0);
  // At half the bandwidth: 1/2 + 15/32 - 5/64 + 3/512.
  CHECK(heaviside(0.5 * h, h) == doctest::Approx(0.896484375).epsilon(1e-14));

  // Odd symmetry about the midpoint and monotonicity inside the band.
  double prev = -1.0;
  for (int k = -10; k <= 10; ++k) {
    const double x = 0.1 * k * h;
    CHECK(heaviside(x, h) + heaviside(-x, h) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(heaviside(x, h) >= prev);
    prev = heaviside(x, h);
  }
}

TEST_CASE("step derivative matches finite differences and the band edges") {
  const double h = 0.35;
  CHECK(heaviside_deriv(0.0, h) == doctest::Approx(15.0 / (16.0 * h)).epsilon(1e-14));
  CHECK(heaviside_deriv(h, h) == 0.0);
  CHECK(heaviside_deriv(-h, h) == 0.0);
  CHECK(heaviside_deriv(1.5 * h, h) == 0.0);

  const double eps = 1e-6;
  for (double x : {-0.3 * h, -0.1 * h, 0.0, 0.2 * h, 0.7 * h}) {
    const double fd = (heaviside(x + eps, h) - heaviside(x - eps, h)) / (2.0 * eps);
    CHECK(heaviside_deriv(x, h) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("bounded projection maps the band onto [-1, 1]") {
  NodalField f(5);
  f << -2.0, -0.5, 0.0, 0.4, 2.0;
  const NodalField p = project(f, 0.5);
  CHECK(p[0] == -1.0);
  CHECK(p[1] == -1.0);  // exactly at the lower band edge
  CHECK(p[2] == 0.0);
  CHECK(p[4] == 1.0);
  CHECK(p[3] > 0.9);  // steep quintic near the band edge
  CHECK(p[3] < 1.0);
}

namespace {

InitShape dome_shape() {
  InitShape s;
  s.kind = InitShape::Kind::kDome;
  s.center = Vec3(0.0, 0.0, 0.0);
  s.radius = 0.3;
  s.d_norm = 0.1;
  return s;
}

}  // namespace

TEST_CASE("pinning to the seed level set is a no-op at the seed design") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.4, 0.4, 0.4), 0.05);
  Box top;
  top.lo = Vec3(-1.0, -1.0, 0.4);
  top.hi = Vec3(1.0, 1.0, 0.4);
  const BoundaryTag tags = tag_boundary(grid, {top});
  const BoundaryTag no_tags = tag_boundary(grid, {});

  const NodalField seed = init_design(grid, dome_shape());

  LevelSetPipeline pinned(grid, tags, 0.05, 0.5);
  pinned.set_seed(seed);
  LevelSetPipeline plain(grid, no_tags, 0.05, 0.5);
  CHECK(pinned.has_pins());
  CHECK(!plain.has_pins());

  const PipelineFields a = pinned.evaluate(seed);
  const PipelineFields b = plain.evaluate(seed);
  CHECK((a.filtered - b.filtered).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((a.projected - b.projected).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((a.levelset - b.levelset).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("pinned nodes stay at the seed level set for any design") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.4, 0.4, 0.4), 0.05);
  Box top;
  top.lo = Vec3(-1.0, -1.0, 0.4);
  top.hi = Vec3(1.0, 1.0, 0.4);
  const BoundaryTag tags = tag_boundary(grid, {top});

  const NodalField seed = init_design(grid, dome_shape());
  LevelSetPipeline pipeline(grid, tags, 0.05, 0.5);
  pipeline.set_seed(seed);

  InitShape other = dome_shape();
  other.radius = 0.22;
  const NodalField psi = init_design(grid, other);
  const PipelineFields f = pipeline.evaluate(psi);

  for (int i = 0; i < grid.node_count(); ++i)
    if (tags.on_dirichlet[i]) CHECK(f.levelset[i] == pipeline.pin_values()[i]);
}

TEST_CASE("evaluating a pinned pipeline without a seed is an error") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.2, 0.2, 0.2), 0.1);
  Box top;
  top.lo = Vec3(-1.0, -1.0, 0.2);
  top.hi = Vec3(1.0, 1.0, 0.2);
  const BoundaryTag tags = tag_boundary(grid, {top});
  LevelSetPipeline pipeline(grid, tags, 0.1, 0.5);
  CHECK_THROWS_AS(pipeline.evaluate(NodalField::Zero(grid.node_count())),
                  NumericalError);
  CHECK_THROWS_AS(pipeline.pin_values(), NumericalError);
}

TEST_CASE("enclosed volume of a mid-height plane is the slab volume") {
  const RegularGrid grid(Vec3::Zero(), Vec3(1.0, 1.0, 0.5), 0.05);
  const BoundaryTag tags = tag_boundary(grid, {});
  LevelSetPipeline pipeline(grid, tags, 0.05, 0.5);

  InitShape s;
  s.kind = InitShape::Kind::kPlane;
  s.z0 = 0.25;
  s.d_norm = 0.1;
  const NodalField psi = init_design(grid, s);

  const double vol = pipeline.enclosed_volume(psi);
  CHECK(vol == doctest::Approx(0.25).epsilon(0.01));

  const PipelineFields f = pipeline.evaluate(psi);
  CHECK(pipeline.enclosed_volume_of_projected(f.projected) ==
        doctest::Approx(vol).epsilon(1e-14));
}

TEST_CASE("enclosed volume grows monotonically with the design field") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.4, 0.4, 0.4), 0.05);
  const BoundaryTag tags = tag_boundary(grid, {});
  LevelSetPipeline pipeline(grid, tags, 0.05, 0.5);
  const NodalField seed = init_design(grid, dome_shape());
  const double v0 = pipeline.enclosed_volume(seed);
  const double v1 = pipeline.enclosed_volume(
      (seed.array() + 0.1).cwiseMin(1.0).matrix());
  CHECK(v1 > v0);
  CHECK(v0 > 0.0);
  CHECK(v1 < 0.4 * 0.4 * 0.4);
}
