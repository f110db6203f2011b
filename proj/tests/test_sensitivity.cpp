#include <doctest.h>

#include <cmath>
#include <vector>

#include "shellopt/design_init.hpp"
#include "shellopt/helmholtz.hpp"
#include "shellopt/pipeline.hpp"
#include "shellopt/sensitivity.hpp"
#include "shellopt/shell_fem.hpp"

using namespace shellopt;

namespace {

// Small spherical cap (quarter sector), apex on +z, clamped along its base
// ring. 9 vertices: every one of them gets probed by the finite-difference
// oracle, so the mesh is deliberately tiny.
ShellMesh make_small_cap(double r, double polar_max, int nr, int na) {
  ShellMesh m;
  m.vertices.push_back(Vec3(0, 0, r));
  for (int ring = 1; ring <= nr; ++ring) {
    const double theta = polar_max * ring / nr;
    for (int j = 0; j <= na; ++j) {
      const double phi = 0.5 * M_PI * j / na;
      m.vertices.push_back(r * Vec3(std::sin(theta) * std::cos(phi),
                                    std::sin(theta) * std::sin(phi),
                                    std::cos(theta)));
    }
  }
  auto vid = [&](int ring, int j) { return 1 + (ring - 1) * (na + 1) + j; };
  for (int j = 0; j < na; ++j)
    m.triangles.push_back({0, vid(1, j), vid(1, j + 1)});
  for (int ring = 1; ring < nr; ++ring)
    for (int j = 0; j < na; ++j) {
      const int a = vid(ring, j), b = vid(ring + 1, j),
                c = vid(ring + 1, j + 1), d = vid(ring, j + 1);
      if ((ring + j) % 2 == 0) {
        m.triangles.push_back({a, b, c});
        m.triangles.push_back({a, c, d});
      } else {
        m.triangles.push_back({a, b, d});
        m.triangles.push_back({b, c, d});
      }
    }
  for (const Vec3& v : m.vertices) m.normals.push_back(v.normalized());
  return m;
}

// Thick enough that finite-difference probes (vertices nudged ~1e-5 along
// their normals) never move a supported vertex out of the box.
Box base_ring_box(double z) {
  Box b;
  b.lo = Vec3(-10, -10, z - 1e-3);
  b.hi = Vec3(10, 10, z + 1e-3);
  return b;
}

}  // namespace

TEST_CASE("shape sensitivity matches a full re-solve finite difference") {
  const double r = 0.3, polar = 50.0 * M_PI / 180.0;
  const int nr = 2, na = 3;
  const ShellMesh mesh = make_small_cap(r, polar, nr, na);
  REQUIRE(mesh.vertex_count() <= 20);
  const Material mat{1e5, 0.3};
  const double thickness = 0.01;
  const double z_base = r * std::cos(polar);

  auto compliance_of = [&](const ShellMesh& geom) {
    ShellModel model(geom, mat, thickness);
    model.add_support(base_ring_box(z_base), true);
    model.add_area_load(Vec3(0, 0, -1.0));
    return model.solve().compliance;
  };

  ShellModel model(mesh, mat, thickness);
  model.add_support(base_ring_box(z_base), true);
  model.add_area_load(Vec3(0, 0, -1.0));
  const FeResult res = model.solve();
  REQUIRE(res.compliance > 0.0);

  const Eigen::VectorXd s = shape_sensitivity(model, res.displacement, 1e-5);

  const double delta = 1e-5;
  Eigen::VectorXd fd(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    ShellMesh plus = mesh, minus = mesh;
    plus.vertices[size_t(v)] += delta * mesh.normals[size_t(v)];
    minus.vertices[size_t(v)] -= delta * mesh.normals[size_t(v)];
    fd[v] = (compliance_of(plus) - compliance_of(minus)) / (2.0 * delta);
  }

  const double fd_max = fd.cwiseAbs().maxCoeff();
  REQUIRE(fd_max > 0.0);
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const double tol = 1e-3 * std::max(std::abs(fd[v]), 0.01 * fd_max);
    INFO("vertex ", v, ": analytic ", s[v], " vs fd ", fd[v]);
    CHECK(std::abs(s[v] - fd[v]) <= tol);
  }
  const double cosine = s.dot(fd) / (s.norm() * fd.norm());
  CHECK(cosine > 0.999);
}

TEST_CASE("dead edge loads contribute no load-derivative term") {
  const double r = 0.3, polar = 50.0 * M_PI / 180.0;
  const ShellMesh mesh = make_small_cap(r, polar, 2, 3);
  const double z_base = r * std::cos(polar);

  ShellModel model(mesh, Material{1e5, 0.3}, 0.01);
  model.add_support(base_ring_box(z_base), true);
  // apex-adjacent boundary edges (the two straight sector sides)
  Box side;
  side.lo = Vec3(-10, -1e-6, -10);
  side.hi = Vec3(10, 1e-6, 10);
  model.add_edge_load(side, Vec3(0, 0, -0.01));
  const FeResult res = model.solve();
  REQUIRE(res.compliance > 0.0);

  const double step = 1e-5;
  const Eigen::VectorXd s = shape_sensitivity(model, res.displacement, step);

  // With no area load, the formula reduces to the pure stiffness term;
  // replicate it independently element by element.
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    double expect = 0.0;
    for (int t : model.vertex_elements()[size_t(v)]) {
      const ElemVec q = model.gather(res.displacement, t);
      const ElemMat dk = (model.stiffness(model.element_geom_offset(t, v, step)) -
                          model.stiffness(model.element_geom_offset(t, v, -step))) /
                         (2.0 * step);
      expect += -0.5 * q.dot(dk * q);
    }
    CHECK(s[v] == doctest::Approx(expect).epsilon(1e-10));
  }

  CHECK_THROWS_AS(shape_sensitivity(model, res.displacement, 0.0), ConfigError);
  CHECK_THROWS_AS(shape_sensitivity(model, res.displacement, -1e-5),
                  ConfigError);
}

TEST_CASE("surface values are deposited on parent nodes conservatively") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.1, 0.1, 0.1), 0.1);  // 8 nodes
  ShellMesh mesh;
  mesh.vertices = {Vec3(0.05, 0, 0), Vec3(0.025, 0.025, 0.05)};
  mesh.triangles = {{0, 1, 0}};  // connectivity is irrelevant here
  mesh.parent_nodes = {{0, 1, 2, 3}, {0, 4, 6, 7}};
  mesh.parent_weights.resize(2);
  mesh.parent_weights[0] << 0.5, 0.5, 0.0, 0.0;
  mesh.parent_weights[1] << 0.25, 0.25, 0.25, 0.25;
  Eigen::VectorXd values(2);
  values << 2.0, -1.0;
  const std::vector<double> areas = {0.3, 0.8};
  const double scale = 7.0;

  SUBCASE("raw deposits") {
    const Eigen::VectorXd out =
        embed_on_grid(grid, mesh, values, areas, scale, false);
    REQUIRE(out.size() == 8);
    // vertex 0 spreads 7*2*0.3 = 4.2 half/half on nodes 0 and 1;
    // vertex 1 spreads 7*(-1)*0.8 = -5.6 in quarters on nodes 0, 4, 6, 7.
    CHECK(out[0] == doctest::Approx(0.5 * 4.2 + 0.25 * -5.6).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(0.5 * 4.2).epsilon(1e-14));
    CHECK(out[2] == 0.0);
    CHECK(out[3] == 0.0);
    CHECK(out[4] == doctest::Approx(0.25 * -5.6).epsilon(1e-14));
    CHECK(out[5] == 0.0);
    CHECK(out[6] == doctest::Approx(0.25 * -5.6).epsilon(1e-14));
    CHECK(out[7] == doctest::Approx(0.25 * -5.6).epsilon(1e-14));
    const double total = scale * (values[0] * areas[0] + values[1] * areas[1]);
    CHECK(out.sum() == doctest::Approx(total).epsilon(1e-13));
  }
  SUBCASE("density normalization divides by the node volume") {
    const Eigen::VectorXd raw =
        embed_on_grid(grid, mesh, values, areas, scale, false);
    const Eigen::VectorXd dens =
        embed_on_grid(grid, mesh, values, areas, scale, true);
    for (int n = 0; n < 8; ++n)
      CHECK(dens[n] == doctest::Approx(raw[n] / grid.weight(n)).epsilon(1e-14));
  }
  SUBCASE("zero values deposit nothing") {
    const Eigen::VectorXd out = embed_on_grid(
        grid, mesh, Eigen::VectorXd::Zero(2), areas, scale, true);
    CHECK(out.lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("enclosed-volume gradient matches finite differences") {
  const RegularGrid grid(Vec3::Zero(), Vec3(0.4, 0.4, 0.4), 0.05);
  InitShape shape;
  shape.kind = InitShape::Kind::kPlane;
  shape.z0 = 0.2;
  const NodalField psi = init_design(grid, shape);
  const HelmholtzFilter filter(grid, 0.05);
  const double bandwidth = 0.5;

  auto volume_of = [&](const NodalField& design) {
    const NodalField f = filter.apply(design);
    double vol = 0.0;
    for (int n = 0; n < grid.node_count(); ++n)
      vol += grid.weight(n) * heaviside(f[n], bandwidth);
    return vol;
  };

  const Eigen::VectorXd grad =
      volume_constraint_gradient(grid, filter, filter.apply(psi), bandwidth);
  const double gmax = grad.cwiseAbs().maxCoeff();
  REQUIRE(gmax > 0.0);

  const double eps = 1e-5;
  const std::vector<int> probes = {
      grid.node_index(4, 4, 4), grid.node_index(0, 0, 4),
      grid.node_index(8, 4, 4), grid.node_index(4, 4, 3),
      grid.node_index(4, 4, 5), grid.node_index(2, 6, 4),
      grid.node_index(0, 0, 0), grid.node_index(4, 4, 8)};
  for (int n : probes) {
    NodalField plus = psi, minus = psi;
    plus[n] += eps;
    minus[n] -= eps;
    const double fd = (volume_of(plus) - volume_of(minus)) / (2.0 * eps);
    INFO("node ", n, ": analytic ", grad[n], " vs fd ", fd);
    CHECK(std::abs(grad[n] - fd) <= 1e-5 * std::max(std::abs(fd), 1e-3 * gmax));
  }
}
