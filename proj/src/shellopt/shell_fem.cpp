#include "shellopt/shell_fem.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <utility>

namespace shellopt {

namespace {

// In-plane 3-point Gauss rule (degree 2) on the reference triangle.
constexpr double kGaussR[3] = {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0};
constexpr double kGaussS[3] = {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0};
constexpr double kGaussW = 1.0 / 6.0;

constexpr double kShapeDr[3] = {-1.0, 1.0, 0.0};
constexpr double kShapeDs[3] = {-1.0, 0.0, 1.0};

struct StrainRows {
  Eigen::Matrix<double, 5, 15> B;  // rows: e_rr, e_ss, e_rs, e_rz, e_sz
  Vec3 g1, g2, g3;
  double det = 0.0;
};

// Covariant linearized strain rows of the 5-DoF/node shell kinematics at
// parametric point (r, s, zeta).
StrainRows strain_rows(const ElementGeom& geom, double thickness, double r,
                       double s, double zeta) {
  StrainRows out;
  const double t = thickness;
  const double shape[3] = {1.0 - r - s, r, s};

  Vec3 g1 = Vec3::Zero(), g2 = Vec3::Zero(), g3 = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    const Vec3 xz = geom.x[i] + (0.5 * zeta * t) * geom.director[i];
    g1 += kShapeDr[i] * xz;
    g2 += kShapeDs[i] * xz;
    g3 += (0.5 * t * shape[i]) * geom.director[i];
  }

  Eigen::Matrix<double, 5, 15>& B = out.B;
  B.setZero();
  for (int i = 0; i < 3; ++i) {
    const int base = 5 * i;
    for (int a = 0; a < 3; ++a) {
      const int d = base + a;
      B(0, d) = kShapeDr[i] * g1[a];
      B(1, d) = kShapeDs[i] * g2[a];
      B(2, d) = 0.5 * (kShapeDs[i] * g1[a] + kShapeDr[i] * g2[a]);
      B(3, d) = 0.5 * kShapeDr[i] * g3[a];
      B(4, d) = 0.5 * kShapeDs[i] * g3[a];
    }
    // Rotation DoFs move the fiber tip: delta director = -t2 * theta + t1 * phi.
    const Vec3 fiber[2] = {-(0.5 * t) * geom.t2[i], (0.5 * t) * geom.t1[i]};
    for (int k = 0; k < 2; ++k) {
      const int d = base + 3 + k;
      const Vec3& v = fiber[k];
      const double vg1 = v.dot(g1), vg2 = v.dot(g2), vg3 = v.dot(g3);
      B(0, d) = zeta * kShapeDr[i] * vg1;
      B(1, d) = zeta * kShapeDs[i] * vg2;
      B(2, d) = 0.5 * zeta * (kShapeDr[i] * vg2 + kShapeDs[i] * vg1);
      B(3, d) = 0.5 * (zeta * kShapeDr[i] * vg3 + shape[i] * vg1);
      B(4, d) = 0.5 * (zeta * kShapeDs[i] * vg3 + shape[i] * vg2);
    }
  }

  out.g1 = g1;
  out.g2 = g2;
  out.g3 = g3;
  Eigen::Matrix3d G;
  G.col(0) = g1;
  G.col(1) = g2;
  G.col(2) = g3;
  out.det = G.determinant();
  return out;
}

Vec3 triangle_normal_raw(const std::array<Vec3, 3>& x) {
  return (x[1] - x[0]).cross(x[2] - x[0]);
}

}  // namespace

void director_frame(const Vec3& director, Vec3& t1, Vec3& t2) {
  const Vec3 n = director.normalized();
  int k = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(n[a]) < std::abs(n[k])) k = a;
  Vec3 axis = Vec3::Zero();
  axis[k] = 1.0;
  t1 = (axis - axis.dot(n) * n).normalized();
  t2 = n.cross(t1);
}

ElemMat element_stiffness(const ElementGeom& geom, const Material& mat,
                          double thickness, const ElementOptions& opts) {
  ElemMat K = ElemMat::Zero();
  const double mu = mat.youngs / (2.0 * (1.0 + mat.poisson));
  const double cps = 2.0 * mat.poisson / (1.0 - mat.poisson);
  const double ks = opts.shear_correction;
  const double zetas[2] = {-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};

  for (double zeta : zetas) {
    // Tying rows for the assumed transverse shear field, sampled at the edge
    // midpoints of this thickness level.
    Eigen::Matrix<double, 1, 15> tie_r, tie_s, tie_c;
    if (opts.assumed_shear) {
      const StrainRows ra = strain_rows(geom, thickness, 0.5, 0.0, zeta);
      const StrainRows rb = strain_rows(geom, thickness, 0.0, 0.5, zeta);
      const StrainRows rc = strain_rows(geom, thickness, 0.5, 0.5, zeta);
      tie_r = ra.B.row(3);
      tie_s = rb.B.row(4);
      tie_c = rc.B.row(4) - rc.B.row(3) - rb.B.row(4) + ra.B.row(3);
    }

    for (int gp = 0; gp < 3; ++gp) {
      const double r = kGaussR[gp], s = kGaussS[gp];
      StrainRows rows = strain_rows(geom, thickness, r, s, zeta);
      if (!(rows.det > 1e-300)) {
        const Vec3 e01 = geom.x[1] - geom.x[0], e02 = geom.x[2] - geom.x[0],
                   e12 = geom.x[2] - geom.x[1];
        const Vec3 n = e01.cross(e02).normalized();
        char msg[256];
        std::snprintf(msg, sizeof(msg),
                      "shell element has non-positive volume jacobian "
                      "(det %.2e, edges %.3g/%.3g/%.3g, director-normal dots "
                      "%.2f/%.2f/%.2f)",
                      rows.det, e01.norm(), e02.norm(), e12.norm(),
                      n.dot(geom.director[0]), n.dot(geom.director[1]),
                      n.dot(geom.director[2]));
        throw NumericalError(msg);
      }
      if (opts.assumed_shear) {
        rows.B.row(3) = tie_r + s * tie_c;
        rows.B.row(4) = tie_s - r * tie_c;
      }

      Eigen::Matrix3d G;
      G.col(0) = rows.g1;
      G.col(1) = rows.g2;
      G.col(2) = rows.g3;
      const Eigen::Matrix3d Minv = (G.transpose() * G).inverse();
      const double a[2][2] = {{Minv(0, 0), Minv(0, 1)},
                              {Minv(1, 0), Minv(1, 1)}};

      // Plane-stress tangent in covariant tensor components; the row order
      // (e_rr, e_ss, e_rs, e_rz, e_sz) carries multiplicities (1, 1, 2, 2, 2)
      // for the symmetric off-diagonal strains.
      auto cten = [&](int i, int j, int k, int l) {
        return mu * (a[i][k] * a[j][l] + a[i][l] * a[j][k] +
                     cps * a[i][j] * a[k][l]);
      };
      static constexpr int kPair[3][2] = {{0, 0}, {1, 1}, {0, 1}};
      static constexpr double kMult[3] = {1.0, 1.0, 2.0};
      Eigen::Matrix<double, 5, 5> D = Eigen::Matrix<double, 5, 5>::Zero();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          D(i, j) = kMult[i] * kMult[j] *
                    cten(kPair[i][0], kPair[i][1], kPair[j][0], kPair[j][1]);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          D(3 + i, 3 + j) = 4.0 * ks * mu *
                            (a[i][j] * Minv(2, 2) + Minv(i, 2) * Minv(j, 2));

      K += (kGaussW * rows.det) * rows.B.transpose() * D * rows.B;
    }
  }

  // Penalize the rotation component about the element normal.
  const Vec3 nraw = triangle_normal_raw(geom.x);
  const double area2 = nraw.norm();
  if (area2 > 0.0) {
    const Vec3 ne = nraw / area2;
    const double cd =
        opts.drill_scale * mat.youngs * thickness * (0.5 * area2) / 3.0;
    for (int i = 0; i < 3; ++i) {
      const double c1 = geom.t1[i].dot(ne);
      const double c2 = geom.t2[i].dot(ne);
      const int d = 5 * i + 3;
      K(d, d) += cd * c1 * c1;
      K(d, d + 1) += cd * c1 * c2;
      K(d + 1, d) += cd * c1 * c2;
      K(d + 1, d + 1) += cd * c2 * c2;
    }
  }
  return K;
}

Eigen::Matrix3d element_strain(const ElementGeom& geom, double thickness,
                               const ElemVec& q, double r, double s,
                               double zeta) {
  const StrainRows rows = strain_rows(geom, thickness, r, s, zeta);
  const Eigen::Matrix<double, 5, 1> eps = rows.B * q;
  Eigen::Matrix3d G;
  G.col(0) = rows.g1;
  G.col(1) = rows.g2;
  G.col(2) = rows.g3;
  const Eigen::Matrix3d Ginv = G.inverse();
  const Vec3 d1 = Ginv.row(0), d2 = Ginv.row(1), d3 = Ginv.row(2);

  Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
  E += eps[0] * d1 * d1.transpose();
  E += eps[1] * d2 * d2.transpose();
  E += eps[2] * (d1 * d2.transpose() + d2 * d1.transpose());
  E += eps[3] * (d1 * d3.transpose() + d3 * d1.transpose());
  E += eps[4] * (d2 * d3.transpose() + d3 * d2.transpose());
  return E;
}

ShellModel::ShellModel(const ShellMesh& mesh, const Material& mat,
                       double thickness, const ElementOptions& opts)
    : material_(mat), thickness_(thickness), options_(opts) {
  if (mesh.vertices.empty() || mesh.triangles.empty())
    throw StructureVanishedError("shell model built from an empty mesh");
  positions_ = mesh.vertices;
  triangles_ = mesh.triangles;
  const int nv = int(positions_.size());

  directors_.resize(nv);
  t1_.resize(nv);
  t2_.resize(nv);
  for (int v = 0; v < nv; ++v) {
    Vec3 n = v < int(mesh.normals.size()) ? mesh.normals[v] : Vec3(0, 0, 1);
    if (n.norm() < 1e-14) n = Vec3(0, 0, 1);
    directors_[v] = n.normalized();
    director_frame(directors_[v], t1_[v], t2_[v]);
  }

  vtx_elems_.assign(nv, {});
  std::map<std::pair<int, int>, int> edge_count;
  for (int t = 0; t < int(triangles_.size()); ++t) {
    for (int k = 0; k < 3; ++k) {
      vtx_elems_[triangles_[t][k]].push_back(t);
      int u = triangles_[t][k], v = triangles_[t][(k + 1) % 3];
      if (u > v) std::swap(u, v);
      edge_count[{u, v}]++;
    }
  }
  for (const auto& [e, c] : edge_count)
    if (c == 1) boundary_edges_.push_back(e);

  fixed_.assign(size_t(5) * nv, 0);
  prescribed_.assign(size_t(5) * nv, 0.0);
  dead_loads_ = Eigen::VectorXd::Zero(5 * nv);
  symmetry_plane_count_.assign(nv, 0);
}

void ShellModel::add_support(const Box& box, bool fix_rotations, double tol) {
  for (int v = 0; v < vertex_count(); ++v) {
    if (!box.contains(positions_[v], tol)) continue;
    for (int c = 0; c < 3; ++c) fixed_[5 * v + c] = 1;
    if (fix_rotations) {
      fixed_[5 * v + 3] = 1;
      fixed_[5 * v + 4] = 1;
    }
  }
}

void ShellModel::add_symmetry_plane(int axis, double value, double tol) {
  if (axis < 0 || axis > 2) throw ConfigError("symmetry axis must be 0, 1 or 2");
  Vec3 e = Vec3::Zero();
  e[axis] = 1.0;
  for (int v = 0; v < vertex_count(); ++v) {
    if (std::abs(positions_[v][axis] - value) > tol) continue;
    symmetry_plane_count_[v]++;
    fixed_[5 * v + axis] = 1;  // no motion through the mirror
    if (symmetry_plane_count_[v] >= 2) {
      fixed_[5 * v + 3] = 1;
      fixed_[5 * v + 4] = 1;
      continue;
    }
    const Vec3 n = directors_[v];
    Vec3 w = e - e.dot(n) * n;
    if (w.norm() < 1e-2) {
      // Director (anti)parallel to the plane normal: the only admissible
      // rotation would be about the director itself, which the two-rotation
      // kinematics cannot represent. Lock both.
      fixed_[5 * v + 3] = 1;
      fixed_[5 * v + 4] = 1;
      continue;
    }
    t1_[v] = w.normalized();
    t2_[v] = n.cross(t1_[v]);
    fixed_[5 * v + 4] = 1;  // rotation about t2 would tilt across the mirror
  }
}

void ShellModel::add_area_load(const Vec3& force_per_area) {
  area_loads_.push_back(force_per_area);
}

void ShellModel::add_edge_load(const Box& box, const Vec3& total_force) {
  std::vector<double> weight(vertex_count(), 0.0);
  double wsum = 0.0;
  for (const auto& [u, v] : boundary_edges_) {
    if (!box.contains(positions_[u], 1e-9) || !box.contains(positions_[v], 1e-9))
      continue;
    const double half = 0.5 * (positions_[u] - positions_[v]).norm();
    weight[u] += half;
    weight[v] += half;
    wsum += 2.0 * half;
  }
  if (wsum <= 0.0)
    throw ConfigError("edge load box does not select any boundary edge");
  for (int v = 0; v < vertex_count(); ++v) {
    if (weight[v] == 0.0) continue;
    for (int c = 0; c < 3; ++c)
      dead_loads_[5 * v + c] += total_force[c] * weight[v] / wsum;
  }
}

void ShellModel::prescribe(int vertex, int component, double value) {
  fixed_[5 * vertex + component] = 1;
  prescribed_[5 * vertex + component] = value;
}

ElementGeom ShellModel::element_geom(int t) const {
  ElementGeom g;
  for (int k = 0; k < 3; ++k) {
    const int v = triangles_[t][k];
    g.x[k] = positions_[v];
    g.director[k] = directors_[v];
    g.t1[k] = t1_[v];
    g.t2[k] = t2_[v];
  }
  return g;
}

ElementGeom ShellModel::element_geom_offset(int t, int vertex,
                                            double offset) const {
  ElementGeom g = element_geom(t);
  for (int k = 0; k < 3; ++k)
    if (triangles_[t][k] == vertex) g.x[k] += offset * directors_[vertex];
  return g;
}

ElemVec ShellModel::area_load_vector(const ElementGeom& g) const {
  ElemVec f = ElemVec::Zero();
  if (area_loads_.empty()) return f;
  Vec3 total = Vec3::Zero();
  for (const Vec3& q : area_loads_) total += q;
  const double third = triangle_normal_raw(g.x).norm() / 6.0;  // area / 3
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) f[5 * i + c] = third * total[c];
  return f;
}

ElemVec ShellModel::gather(const Eigen::VectorXd& u, int t) const {
  ElemVec q;
  for (int k = 0; k < 3; ++k)
    for (int c = 0; c < 5; ++c) q[5 * k + c] = u[5 * triangles_[t][k] + c];
  return q;
}

bool ShellModel::vertex_fully_fixed(int v) const {
  for (int c = 0; c < 5; ++c)
    if (!fixed_[5 * v + c]) return false;
  return true;
}

FeResult ShellModel::solve() const {
  const int nv = vertex_count();
  const int nt = int(triangles_.size());
  const int ndof = 5 * nv;

  std::vector<ElemMat> Ke(nt);
  // Element failures must not escape the parallel region; capture the first
  // exception and rethrow it once the loop has finished.
  std::exception_ptr elem_error;
#ifdef SHELLOPT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int t = 0; t < nt; ++t) {
    try {
      Ke[t] = stiffness(element_geom(t));
    } catch (...) {
#ifdef SHELLOPT_HAVE_OPENMP
#pragma omp critical
#endif
      if (!elem_error) elem_error = std::current_exception();
    }
  }
  if (elem_error) std::rethrow_exception(elem_error);

  Eigen::VectorXd f = dead_loads_;
  for (int t = 0; t < nt; ++t) {
    const ElemVec fe = area_load_vector(element_geom(t));
    for (int k = 0; k < 3; ++k)
      for (int c = 0; c < 5; ++c) f[5 * triangles_[t][k] + c] += fe[5 * k + c];
  }

  std::vector<int> free_index(ndof, -1);
  int nfree = 0;
  for (int d = 0; d < ndof; ++d)
    if (!fixed_[d]) free_index[d] = nfree++;

  Eigen::VectorXd u = Eigen::VectorXd::Zero(ndof);
  for (int d = 0; d < ndof; ++d)
    if (fixed_[d]) u[d] = prescribed_[d];

  if (nfree > 0) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nfree);
    for (int d = 0; d < ndof; ++d)
      if (free_index[d] >= 0) rhs[free_index[d]] = f[d];

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(size_t(nt) * 225);
    for (int t = 0; t < nt; ++t) {
      int gdof[15];
      for (int k = 0; k < 3; ++k)
        for (int c = 0; c < 5; ++c) gdof[5 * k + c] = 5 * triangles_[t][k] + c;
      for (int i = 0; i < 15; ++i) {
        const int gi = gdof[i];
        if (fixed_[gi]) continue;
        for (int j = 0; j < 15; ++j) {
          const int gj = gdof[j];
          if (fixed_[gj]) {
            if (prescribed_[gj] != 0.0)
              rhs[free_index[gi]] -= Ke[t](i, j) * prescribed_[gj];
          } else {
            trips.emplace_back(free_index[gi], free_index[gj], Ke[t](i, j));
          }
        }
      }
    }

    Eigen::SparseMatrix<double> K(nfree, nfree);
    K.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(K);
    if (solver.info() != Eigen::Success)
      throw NumericalError("stiffness factorization failed");

    const Eigen::VectorXd& diag = solver.vectorD();
    double dmax = 0.0;
    for (int i = 0; i < diag.size(); ++i)
      if (std::isfinite(diag[i])) dmax = std::max(dmax, std::abs(diag[i]));
    int null_dim = 0;
    for (int i = 0; i < diag.size(); ++i)
      if (!std::isfinite(diag[i]) || std::abs(diag[i]) <= 1e-12 * dmax)
        ++null_dim;
    if (dmax == 0.0) null_dim = int(diag.size());
    if (null_dim > 0)
      throw SingularSystemError(
          "stiffness matrix is singular (under-constrained model)", null_dim);

    const Eigen::VectorXd uf = solver.solve(rhs);
    if (!uf.allFinite())
      throw NumericalError("linear solve produced non-finite displacements");
    for (int d = 0; d < ndof; ++d)
      if (free_index[d] >= 0) u[d] = uf[free_index[d]];
  }

  FeResult res;
  res.displacement = u;
  res.load = f;
  res.element_energy.resize(nt);
  double energy = 0.0;
  for (int t = 0; t < nt; ++t) {
    const ElemVec q = gather(u, t);
    res.element_energy[t] = 0.5 * q.dot(Ke[t] * q);
    energy += res.element_energy[t];
  }
  res.compliance = energy;
  res.external_work = 0.5 * f.dot(u);
  return res;
}

}  // namespace shellopt
