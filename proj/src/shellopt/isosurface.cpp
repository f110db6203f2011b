#include "shellopt/isosurface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace shellopt {

namespace {

double tri_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 tri_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 n = (b - a).cross(c - a);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double tri_min_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
  const double longest = std::max({la, lb, lc});
  if (longest <= 0.0) return 0.0;
  auto angle = [](double opp, double s1, double s2) {
    const double cosv =
        std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0);
    return std::acos(cosv);
  };
  const double amin = std::min(
      {angle(la, lb, lc), angle(lb, lc, la), angle(lc, la, lb)});
  return amin * 180.0 / M_PI;
}

}  // namespace

double ShellMesh::triangle_area(int t) const {
  const auto& tr = triangles[size_t(t)];
  return tri_area(vertices[size_t(tr[0])], vertices[size_t(tr[1])],
                  vertices[size_t(tr[2])]);
}

Vec3 ShellMesh::triangle_normal(int t) const {
  const auto& tr = triangles[size_t(t)];
  return tri_normal(vertices[size_t(tr[0])], vertices[size_t(tr[1])],
                    vertices[size_t(tr[2])]);
}

double ShellMesh::total_area() const {
  double a = 0.0;
  for (int t = 0; t < triangle_count(); ++t) a += triangle_area(t);
  return a;
}

// ---------------------------------------------------------------------------
// extraction

namespace {

// Weld keys: a cut on grid edge (lo, hi), or a vertex placed exactly on a
// grid node (hi part all-ones). Grid node ids fit in 32 bits comfortably.
constexpr uint64_t kNodeMark = 0xffffffffull;

uint64_t edge_key(int a, int b) {
  const uint64_t lo = uint64_t(std::min(a, b));
  const uint64_t hi = uint64_t(std::max(a, b));
  return (lo << 32) | hi;
}

uint64_t node_key(int a) { return (uint64_t(a) << 32) | kNodeMark; }

struct Extractor {
  const RegularGrid& grid;
  const NodalField& field;  // snapped values
  ShellMesh mesh;
  std::unordered_map<uint64_t, int> weld;

  // Current tet context.
  std::array<int, 4> gid;
  std::array<Vec3, 4> pos;
  std::array<double, 4> val;

  // Returns the welded vertex for the cut on the tet edge (local a -> b),
  // where val[a] < 0 <= val[b]. Creates the vertex (with its grid embedding)
  // on first encounter.
  int cut_vertex(int a, int b) {
    uint64_t key;
    if (val[size_t(b)] == 0.0) {
      key = node_key(gid[size_t(b)]);
    } else {
      key = edge_key(gid[size_t(a)], gid[size_t(b)]);
    }
    auto it = weld.find(key);
    if (it != weld.end()) return it->second;

    const int id = int(mesh.vertices.size());
    Eigen::Vector4d w = Eigen::Vector4d::Zero();
    Vec3 p;
    if (val[size_t(b)] == 0.0) {
      p = pos[size_t(b)];
      w[b] = 1.0;
    } else {
      const double t = val[size_t(a)] / (val[size_t(a)] - val[size_t(b)]);
      p = (1.0 - t) * pos[size_t(a)] + t * pos[size_t(b)];
      w[a] = 1.0 - t;
      w[b] = t;
    }
    mesh.vertices.push_back(p);
    mesh.parent_nodes.push_back(gid);
    mesh.parent_weights.push_back(w);
    weld.emplace(key, id);
    return id;
  }

  void emit(int v0, int v1, int v2) {
    if (v0 == v1 || v1 == v2 || v0 == v2) return;  // degenerate cut pattern
    const Vec3 &a = mesh.vertices[size_t(v0)], &b = mesh.vertices[size_t(v1)],
               &c = mesh.vertices[size_t(v2)];
    const double h = grid.spacing();
    if (tri_area(a, b, c) < 1e-14 * h * h) return;

    // Orient so the normal points toward decreasing field values. The
    // gradient of the linear interpolant is constant per tet.
    Eigen::Matrix3d e;
    e.row(0) = pos[1] - pos[0];
    e.row(1) = pos[2] - pos[0];
    e.row(2) = pos[3] - pos[0];
    const Vec3 dv(val[1] - val[0], val[2] - val[0], val[3] - val[0]);
    const Vec3 g = e.lu().solve(dv);
    std::array<int, 3> tri = {v0, v1, v2};
    if ((b - a).cross(c - a).dot(g) > 0.0) std::swap(tri[1], tri[2]);
    mesh.triangles.push_back(tri);
  }

  void process_tet() {
    std::array<int, 4> neg, other;
    int nn = 0, no = 0;
    for (int i = 0; i < 4; ++i) {
      if (val[size_t(i)] < 0.0)
        neg[size_t(nn++)] = i;
      else
        other[size_t(no++)] = i;
    }
    if (nn == 0 || nn == 4) return;

    if (nn == 1) {
      emit(cut_vertex(neg[0], other[0]), cut_vertex(neg[0], other[1]),
           cut_vertex(neg[0], other[2]));
    } else if (nn == 3) {
      emit(cut_vertex(neg[0], other[0]), cut_vertex(neg[1], other[0]),
           cut_vertex(neg[2], other[0]));
    } else {
      // Two negatives: the cut is a quad; split along one diagonal.
      const int ac = cut_vertex(neg[0], other[0]);
      const int ad = cut_vertex(neg[0], other[1]);
      const int bd = cut_vertex(neg[1], other[1]);
      const int bc = cut_vertex(neg[1], other[0]);
      emit(ac, ad, bd);
      emit(ac, bd, bc);
    }
  }
};

// Snaps near-zero node values to exact zero, with "near" measured against
// the value range of the cells around each node.
NodalField snap_field(const RegularGrid& grid, const NodalField& field,
                      double snap_eps) {
  NodalField snapped = field;
  if (snap_eps <= 0.0) return snapped;

  const int n = grid.node_count();
  std::vector<double> local_range(size_t(n), 0.0);
  for (int c = 0; c < grid.cell_count(); ++c) {
    const auto nodes = grid.cell_nodes(c);
    double lo = std::numeric_limits<double>::max(), hi = -lo;
    for (int v : nodes) {
      lo = std::min(lo, field[v]);
      hi = std::max(hi, field[v]);
    }
    const double range = hi - lo;
    for (int v : nodes)
      local_range[size_t(v)] = std::max(local_range[size_t(v)], range);
  }
  for (int i = 0; i < n; ++i)
    if (std::abs(field[i]) < snap_eps * local_range[size_t(i)]) snapped[i] = 0.0;
  return snapped;
}

}  // namespace

ShellMesh extract_isosurface(const RegularGrid& grid, const NodalField& field,
                             double snap_eps) {
  if (field.size() != grid.node_count())
    throw ConfigError("field size does not match the grid");
  const NodalField snapped = snap_field(grid, field, snap_eps);

  Extractor ex{grid, snapped, {}, {}, {}, {}, {}};
  ex.weld.reserve(size_t(grid.node_count()));
  for (int c = 0; c < grid.cell_count(); ++c) {
    const auto corners = grid.cell_nodes(c);
    // Cheap reject: cells without a strict sign change contribute nothing.
    bool has_neg = false, has_nonneg = false;
    for (int v : corners) {
      if (snapped[v] < 0.0)
        has_neg = true;
      else
        has_nonneg = true;
    }
    if (!has_neg || !has_nonneg) continue;

    for (int t = 0; t < RegularGrid::kTetsPerCell; ++t) {
      const auto& loc = RegularGrid::kTetCorners[size_t(t)];
      for (int i = 0; i < 4; ++i) {
        ex.gid[size_t(i)] = corners[size_t(loc[size_t(i)])];
        ex.pos[size_t(i)] = grid.node_pos(ex.gid[size_t(i)]);
        ex.val[size_t(i)] = snapped[ex.gid[size_t(i)]];
      }
      ex.process_tet();
    }
  }
  return std::move(ex.mesh);
}

// ---------------------------------------------------------------------------
// stats

MeshStats mesh_stats(const ShellMesh& mesh) {
  MeshStats st;
  st.n_triangles = mesh.triangle_count();
  st.total_area = mesh.total_area();
  st.min_angle_deg = 180.0;
  st.min_edge_length = std::numeric_limits<double>::max();

  std::unordered_map<uint64_t, int> edge_count;
  std::vector<uint8_t> used(size_t(mesh.vertex_count()), 0);
  for (const auto& tr : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      used[size_t(tr[size_t(i)])] = 1;
      const int a = tr[size_t(i)], b = tr[size_t((i + 1) % 3)];
      edge_count[edge_key(a, b)]++;
      st.min_edge_length = std::min(
          st.min_edge_length,
          (mesh.vertices[size_t(a)] - mesh.vertices[size_t(b)]).norm());
    }
    st.min_angle_deg = std::min(
        st.min_angle_deg,
        tri_min_angle(mesh.vertices[size_t(tr[0])], mesh.vertices[size_t(tr[1])],
                      mesh.vertices[size_t(tr[2])]));
  }
  for (uint8_t u : used) st.n_vertices += u;
  st.n_edges = int(edge_count.size());
  if (mesh.triangles.empty()) {
    st.min_angle_deg = 0.0;
    st.min_edge_length = 0.0;
  }

  // Boundary loops: union-find over the endpoints of boundary edges.
  std::unordered_map<int, int> uf;  // vertex -> parent
  std::function<int(int)> find = [&](int x) {
    while (uf[x] != x) {
      uf[x] = uf[uf[x]];
      x = uf[x];
    }
    return x;
  };
  int boundary_vertices = 0;
  for (const auto& [key, count] : edge_count) {
    if (count == 1)
      st.boundary_edges++;
    else if (count > 2)
      st.nonmanifold_edges++;
    if (count != 1) continue;
    const int a = int(key >> 32), b = int(key & 0xffffffffull);
    for (int v : {a, b})
      if (!uf.count(v)) {
        uf[v] = v;
        ++boundary_vertices;
      }
    uf[find(a)] = find(b);
  }
  std::set<int> roots;
  for (const auto& [v, p] : uf) roots.insert(find(v));
  st.boundary_loops = int(roots.size());
  st.euler_characteristic = st.n_vertices - st.n_edges + st.n_triangles;
  return st;
}

// ---------------------------------------------------------------------------
// cleanup

namespace {

struct CollapseContext {
  ShellMesh& mesh;
  std::vector<uint8_t> vertex_dead;
  std::vector<uint8_t> tri_dead;
  std::vector<std::vector<int>> vtx_tris;
  std::unordered_map<uint64_t, int> edge_count;

  explicit CollapseContext(ShellMesh& m) : mesh(m) {
    vertex_dead.assign(size_t(m.vertex_count()), 0);
    tri_dead.assign(size_t(m.triangle_count()), 0);
  }

  void rebuild() {
    vtx_tris.assign(size_t(mesh.vertex_count()), {});
    edge_count.clear();
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      if (tri_dead[size_t(t)]) continue;
      const auto& tr = mesh.triangles[size_t(t)];
      for (int i = 0; i < 3; ++i) {
        vtx_tris[size_t(tr[size_t(i)])].push_back(t);
        edge_count[edge_key(tr[size_t(i)], tr[size_t((i + 1) % 3)])]++;
      }
    }
  }

  bool is_boundary_vertex(int v) const {
    for (int t : vtx_tris[size_t(v)]) {
      const auto& tr = mesh.triangles[size_t(t)];
      for (int i = 0; i < 3; ++i) {
        const int a = tr[size_t(i)], b = tr[size_t((i + 1) % 3)];
        if ((a == v || b == v) && edge_count.at(edge_key(a, b)) == 1)
          return true;
      }
    }
    return false;
  }

  // Minimum angle over the triangles vertex r would hand to k, or a negative
  // value when the retargeting is invalid (flip or degenerate).
  double retarget_quality(int r, int k) const {
    double worst = 180.0;
    for (int t : vtx_tris[size_t(r)]) {
      auto tr = mesh.triangles[size_t(t)];
      if (tr[0] == k || tr[1] == k || tr[2] == k) continue;  // will vanish
      const Vec3 old_n = tri_normal(mesh.vertices[size_t(tr[0])],
                                    mesh.vertices[size_t(tr[1])],
                                    mesh.vertices[size_t(tr[2])]);
      for (int i = 0; i < 3; ++i)
        if (tr[size_t(i)] == r) tr[size_t(i)] = k;
      const Vec3 &a = mesh.vertices[size_t(tr[0])],
                 &b = mesh.vertices[size_t(tr[1])],
                 &c = mesh.vertices[size_t(tr[2])];
      if (tri_area(a, b, c) < 1e-16) return -1.0;
      if (tri_normal(a, b, c).dot(old_n) <= 0.0) return -1.0;
      worst = std::min(worst, tri_min_angle(a, b, c));
    }
    return worst;
  }

  // Link condition: the shared neighbors of u and v must be exactly the apex
  // vertices of the triangles on edge (u, v); otherwise the collapse pinches
  // the surface.
  bool link_ok(int u, int v) const {
    std::set<int> nu, nv, apex;
    for (int t : vtx_tris[size_t(u)]) {
      const auto& tr = mesh.triangles[size_t(t)];
      bool has_v = false;
      for (int x : tr)
        if (x == v) has_v = true;
      for (int x : tr) {
        if (x != u && x != v) {
          nu.insert(x);
          if (has_v) apex.insert(x);
        }
      }
    }
    for (int t : vtx_tris[size_t(v)]) {
      const auto& tr = mesh.triangles[size_t(t)];
      for (int x : tr)
        if (x != u && x != v) nv.insert(x);
    }
    std::set<int> common;
    std::set_intersection(nu.begin(), nu.end(), nv.begin(), nv.end(),
                          std::inserter(common, common.begin()));
    return common == apex;
  }

  // Collapses edge (u, v), keeping the better endpoint within the boundary
  // rules. Returns the retired vertex, or -1 if the collapse was rejected.
  int try_collapse(int u, int v) {
    if (!link_ok(u, v)) return -1;
    const bool bu = is_boundary_vertex(u), bv = is_boundary_vertex(v);
    std::vector<int> keep;
    if (bu && bv) {
      // Two boundary vertices may only merge along a boundary edge; a chord
      // collapse would fuse separate boundary loops.
      if (edge_count.at(edge_key(u, v)) != 1) return -1;
      keep = {u, v};
    } else if (bu) {
      keep = {u};
    } else if (bv) {
      keep = {v};
    } else {
      keep = {u, v};
    }

    int best = -1;
    double best_q = 0.1;  // degrees; floor for "not degenerate"
    for (int k : keep) {
      const int r = (k == u) ? v : u;
      const double q = retarget_quality(r, k);
      if (q > best_q) {
        best_q = q;
        best = k;
      }
    }
    if (best < 0) return -1;

    const int k = best, r = (k == u) ? v : u;
    for (int t : vtx_tris[size_t(r)]) {
      auto& tr = mesh.triangles[size_t(t)];
      if (tr[0] == k || tr[1] == k || tr[2] == k) {
        tri_dead[size_t(t)] = 1;
        continue;
      }
      for (int i = 0; i < 3; ++i)
        if (tr[size_t(i)] == r) tr[size_t(i)] = k;
    }
    vertex_dead[size_t(r)] = 1;
    return r;
  }

  void compact() {
    std::vector<int> vmap(size_t(mesh.vertex_count()), -1);
    int nv = 0;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      if (vertex_dead[size_t(v)]) continue;
      vmap[size_t(v)] = nv;
      if (nv != v) {
        mesh.vertices[size_t(nv)] = mesh.vertices[size_t(v)];
        if (!mesh.normals.empty()) mesh.normals[size_t(nv)] = mesh.normals[size_t(v)];
        if (!mesh.parent_nodes.empty()) {
          mesh.parent_nodes[size_t(nv)] = mesh.parent_nodes[size_t(v)];
          mesh.parent_weights[size_t(nv)] = mesh.parent_weights[size_t(v)];
        }
      }
      ++nv;
    }
    mesh.vertices.resize(size_t(nv));
    if (!mesh.normals.empty()) mesh.normals.resize(size_t(nv));
    if (!mesh.parent_nodes.empty()) {
      mesh.parent_nodes.resize(size_t(nv));
      mesh.parent_weights.resize(size_t(nv));
    }
    int nt = 0;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      if (tri_dead[size_t(t)]) continue;
      auto tr = mesh.triangles[size_t(t)];
      for (int i = 0; i < 3; ++i) tr[size_t(i)] = vmap[size_t(tr[size_t(i)])];
      mesh.triangles[size_t(nt++)] = tr;
    }
    mesh.triangles.resize(size_t(nt));
  }
};

}  // namespace

CleanupStats cleanup(ShellMesh& mesh, double hmin, double min_angle_deg) {
  CleanupStats stats;
  CollapseContext ctx(mesh);

  // Phase 1: collapse short edges, shortest first.
  for (int pass = 0; pass < 20; ++pass) {
    ctx.rebuild();
    struct Cand {
      double len;
      int u, v;
    };
    std::vector<Cand> cands;
    for (const auto& [key, count] : ctx.edge_count) {
      const int a = int(key >> 32), b = int(key & 0xffffffffull);
      const double len =
          (mesh.vertices[size_t(a)] - mesh.vertices[size_t(b)]).norm();
      if (len < hmin) cands.push_back({len, a, b});
    }
    if (cands.empty()) break;
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
      return std::tie(x.len, x.u, x.v) < std::tie(y.len, y.u, y.v);
    });

    std::vector<uint8_t> touched(size_t(mesh.vertex_count()), 0);
    bool changed = false;
    for (const Cand& c : cands) {
      if (ctx.vertex_dead[size_t(c.u)] || ctx.vertex_dead[size_t(c.v)]) continue;
      if (touched[size_t(c.u)] || touched[size_t(c.v)]) continue;
      const int r = ctx.try_collapse(c.u, c.v);
      if (r < 0) {
        stats.skipped++;
        continue;
      }
      stats.collapsed++;
      changed = true;
      // Freeze the whole neighborhood for this pass; adjacency is stale there.
      for (int t : ctx.vtx_tris[size_t(c.u)])
        for (int x : mesh.triangles[size_t(t)]) touched[size_t(x)] = 1;
      for (int t : ctx.vtx_tris[size_t(c.v)])
        for (int x : mesh.triangles[size_t(t)]) touched[size_t(x)] = 1;
      touched[size_t(c.u)] = touched[size_t(c.v)] = 1;
    }
    if (!changed) break;
  }

  // Phase 2: collapse the shortest edge of triangles under the angle floor.
  for (int pass = 0; pass < 10; ++pass) {
    ctx.rebuild();
    struct Cand {
      double angle;
      int u, v;
    };
    std::vector<Cand> cands;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      if (ctx.tri_dead[size_t(t)]) continue;
      const auto& tr = mesh.triangles[size_t(t)];
      const Vec3 &a = mesh.vertices[size_t(tr[0])],
                 &b = mesh.vertices[size_t(tr[1])],
                 &c = mesh.vertices[size_t(tr[2])];
      const double ang = tri_min_angle(a, b, c);
      if (ang >= min_angle_deg) continue;
      // Shortest edge of this triangle.
      const double l01 = (a - b).norm(), l12 = (b - c).norm(), l20 = (c - a).norm();
      int u = tr[0], v = tr[1];
      double lmin = l01;
      if (l12 < lmin) {
        lmin = l12;
        u = tr[1];
        v = tr[2];
      }
      if (l20 < lmin) {
        u = tr[2];
        v = tr[0];
      }
      cands.push_back({ang, std::min(u, v), std::max(u, v)});
    }
    if (cands.empty()) break;
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
      return std::tie(x.angle, x.u, x.v) < std::tie(y.angle, y.u, y.v);
    });

    std::vector<uint8_t> touched(size_t(mesh.vertex_count()), 0);
    bool changed = false;
    for (const Cand& c : cands) {
      if (ctx.vertex_dead[size_t(c.u)] || ctx.vertex_dead[size_t(c.v)]) continue;
      if (touched[size_t(c.u)] || touched[size_t(c.v)]) continue;
      const int r = ctx.try_collapse(c.u, c.v);
      if (r < 0) {
        stats.skipped++;
        continue;
      }
      stats.quality_collapsed++;
      changed = true;
      for (int t : ctx.vtx_tris[size_t(c.u)])
        for (int x : mesh.triangles[size_t(t)]) touched[size_t(x)] = 1;
      for (int t : ctx.vtx_tris[size_t(c.v)])
        for (int x : mesh.triangles[size_t(t)]) touched[size_t(x)] = 1;
      touched[size_t(c.u)] = touched[size_t(c.v)] = 1;
    }
    if (!changed) break;
  }

  ctx.compact();
  return stats;
}

// ---------------------------------------------------------------------------
// gradients and normals

std::vector<Vec3> node_gradients(const RegularGrid& grid,
                                 const NodalField& field) {
  const int nx = grid.nx(), ny = grid.ny(), nz = grid.nz();
  const double h = grid.spacing();
  std::vector<Vec3> grads(size_t(grid.node_count()), Vec3::Zero());

  auto diff = [&](int idx, int stride, int coord, int count) {
    const double inv2h = 1.0 / (2.0 * h);
    if (count < 2) return 0.0;
    if (coord > 0 && coord < count - 1)
      return (field[idx + stride] - field[idx - stride]) * inv2h;
    if (count == 2)
      return coord == 0 ? (field[idx + stride] - field[idx]) / h
                        : (field[idx] - field[idx - stride]) / h;
    if (coord == 0)
      return (-3.0 * field[idx] + 4.0 * field[idx + stride] -
              field[idx + 2 * stride]) * inv2h;
    return (3.0 * field[idx] - 4.0 * field[idx - stride] +
            field[idx - 2 * stride]) * inv2h;
  };

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int idx = grid.node_index(i, j, k);
        grads[size_t(idx)] = Vec3(diff(idx, 1, i, nx), diff(idx, nx, j, ny),
                                  diff(idx, nx * ny, k, nz));
      }
  return grads;
}

Vec3 sample_gradient(const RegularGrid& grid, const std::vector<Vec3>& grads,
                     const Vec3& p) {
  const double h = grid.spacing();
  const Vec3 local = (p - grid.origin()) / h;
  int c[3];
  double u[3];
  const int dims[3] = {grid.nx(), grid.ny(), grid.nz()};
  for (int a = 0; a < 3; ++a) {
    c[a] = std::clamp(int(std::floor(local[a])), 0, dims[a] - 2);
    u[a] = std::clamp(local[a] - double(c[a]), 0.0, 1.0);
  }
  Vec3 g = Vec3::Zero();
  for (int corner = 0; corner < 8; ++corner) {
    const int di = corner & 1, dj = (corner >> 1) & 1, dk = (corner >> 2) & 1;
    const double w = (di ? u[0] : 1.0 - u[0]) * (dj ? u[1] : 1.0 - u[1]) *
                     (dk ? u[2] : 1.0 - u[2]);
    g += w * grads[size_t(grid.node_index(c[0] + di, c[1] + dj, c[2] + dk))];
  }
  return g;
}

void compute_vertex_normals(const RegularGrid& grid, const NodalField& field,
                            ShellMesh& mesh) {
  const auto grads = node_gradients(grid, field);

  // Area-weighted triangle normals as the fallback accumulator.
  std::vector<Vec3> acc(size_t(mesh.vertex_count()), Vec3::Zero());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tr = mesh.triangles[size_t(t)];
    const Vec3 n = (mesh.vertices[size_t(tr[1])] - mesh.vertices[size_t(tr[0])])
                       .cross(mesh.vertices[size_t(tr[2])] -
                              mesh.vertices[size_t(tr[0])]);
    for (int v : tr) acc[size_t(v)] += n;  // |n| = 2*area: area weighting
  }

  mesh.normals.resize(mesh.vertices.size());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const Vec3 g = sample_gradient(grid, grads, mesh.vertices[size_t(v)]);
    const double len = g.norm();
    const double alen = acc[size_t(v)].norm();
    const Vec3 avg =
        alen > 0.0 ? Vec3(acc[size_t(v)] / alen) : Vec3(0, 0, 1);
    if (len < 1e-12) {
      mesh.normals[size_t(v)] = avg;
      continue;
    }
    const Vec3 n = -g / len;
    // Near creases the coarse triangulation can tilt so far from the field
    // gradient that the shell element's thickness mapping folds (negative
    // volume jacobian). When the gradient direction is close to tangent to
    // the incident triangles, the averaged geometric normal is the usable
    // director.
    mesh.normals[size_t(v)] = (alen > 0.0 && n.dot(avg) < 0.17) ? avg : n;
  }
}

std::vector<double> lumped_vertex_areas(const ShellMesh& mesh) {
  std::vector<double> areas(size_t(mesh.vertex_count()), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double third = mesh.triangle_area(t) / 3.0;
    for (int v : mesh.triangles[size_t(t)]) areas[size_t(v)] += third;
  }
  return areas;
}

int drop_unanchored_components(
    ShellMesh& mesh, const std::function<bool(const Vec3&)>& anchored) {
  const int nv = mesh.vertex_count();
  // Union-find over vertices joined by triangle edges.
  std::vector<int> root(static_cast<size_t>(nv));
  for (int v = 0; v < nv; ++v) root[size_t(v)] = v;
  std::function<int(int)> find = [&](int v) {
    while (root[size_t(v)] != v) {
      root[size_t(v)] = root[size_t(root[size_t(v)])];
      v = root[size_t(v)];
    }
    return v;
  };
  for (const auto& tri : mesh.triangles) {
    const int a = find(tri[0]);
    root[size_t(find(tri[1]))] = a;
    root[size_t(find(tri[2]))] = a;
  }

  std::vector<uint8_t> keep_component(size_t(nv), 0);
  for (int v = 0; v < nv; ++v)
    if (anchored(mesh.vertices[size_t(v)])) keep_component[size_t(find(v))] = 1;

  int removed = 0;
  size_t out = 0;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (!keep_component[size_t(find(mesh.triangles[t][0]))]) {
      ++removed;
      continue;
    }
    mesh.triangles[out++] = mesh.triangles[t];
  }
  if (removed == 0) return 0;
  mesh.triangles.resize(out);

  // Compact the vertex arrays, dropping everything no triangle references.
  std::vector<int> remap(size_t(nv), -1);
  int kept = 0;
  for (const auto& tri : mesh.triangles)
    for (int v : tri)
      if (remap[size_t(v)] < 0) remap[size_t(v)] = kept++;
  const bool has_normals = mesh.normals.size() == size_t(nv);
  const bool has_embed = mesh.parent_nodes.size() == size_t(nv) &&
                         mesh.parent_weights.size() == size_t(nv);
  ShellMesh packed;
  packed.vertices.resize(size_t(kept));
  if (has_embed) {
    packed.parent_nodes.resize(size_t(kept));
    packed.parent_weights.resize(size_t(kept));
  }
  if (has_normals) packed.normals.resize(size_t(kept));
  for (int v = 0; v < nv; ++v) {
    const int m = remap[size_t(v)];
    if (m < 0) continue;
    packed.vertices[size_t(m)] = mesh.vertices[size_t(v)];
    if (has_embed) {
      packed.parent_nodes[size_t(m)] = mesh.parent_nodes[size_t(v)];
      packed.parent_weights[size_t(m)] = mesh.parent_weights[size_t(v)];
    }
    if (has_normals) packed.normals[size_t(m)] = mesh.normals[size_t(v)];
  }
  for (auto& tri : mesh.triangles)
    for (int& v : tri) v = remap[size_t(v)];
  mesh.vertices = std::move(packed.vertices);
  mesh.parent_nodes = std::move(packed.parent_nodes);
  mesh.parent_weights = std::move(packed.parent_weights);
  mesh.normals = std::move(packed.normals);
  return removed;
}

int collapse_folded_triangles(ShellMesh& mesh, double cos_floor) {
  if (mesh.triangle_count() == 0) return 0;
  CollapseContext ctx(mesh);
  int welded = 0;
  for (int pass = 0; pass < 10; ++pass) {
    ctx.rebuild();
    struct Cand {
      double dot;
      int t;
    };
    std::vector<Cand> cands;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      if (ctx.tri_dead[size_t(t)]) continue;
      const auto& tr = mesh.triangles[size_t(t)];
      const Vec3 &a = mesh.vertices[size_t(tr[0])],
                 &b = mesh.vertices[size_t(tr[1])],
                 &c = mesh.vertices[size_t(tr[2])];
      Vec3 n = (b - a).cross(c - a);
      const double nn = n.norm();
      if (nn <= 0.0) continue;  // zero-area is cleanup's problem, not ours
      n /= nn;
      double d = n.dot(mesh.normals[size_t(tr[0])]);
      d = std::min(d, n.dot(mesh.normals[size_t(tr[1])]));
      d = std::min(d, n.dot(mesh.normals[size_t(tr[2])]));
      if (d >= cos_floor) continue;
      cands.push_back({d, t});
    }
    if (cands.empty()) break;
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
      return std::tie(x.dot, x.t) < std::tie(y.dot, y.t);
    });

    std::vector<uint8_t> touched(size_t(mesh.vertex_count()), 0);
    bool changed = false;
    for (const Cand& c : cands) {
      if (ctx.tri_dead[size_t(c.t)]) continue;
      const auto& tr = mesh.triangles[size_t(c.t)];
      // Try the triangle's edges shortest-first; any collapse removes it.
      struct E {
        double len;
        int u, v;
      };
      std::array<E, 3> edges;
      for (int i = 0; i < 3; ++i) {
        const int u = tr[size_t(i)], v = tr[size_t((i + 1) % 3)];
        edges[size_t(i)] = {(mesh.vertices[size_t(u)] - mesh.vertices[size_t(v)]).norm(),
                            std::min(u, v), std::max(u, v)};
      }
      std::sort(edges.begin(), edges.end(), [](const E& x, const E& y) {
        return std::tie(x.len, x.u, x.v) < std::tie(y.len, y.u, y.v);
      });
      for (const E& e : edges) {
        if (ctx.vertex_dead[size_t(e.u)] || ctx.vertex_dead[size_t(e.v)]) continue;
        if (touched[size_t(e.u)] || touched[size_t(e.v)]) continue;
        if (ctx.try_collapse(e.u, e.v) < 0) continue;
        ++welded;
        changed = true;
        for (int t : ctx.vtx_tris[size_t(e.u)])
          for (int x : mesh.triangles[size_t(t)]) touched[size_t(x)] = 1;
        for (int t : ctx.vtx_tris[size_t(e.v)])
          for (int x : mesh.triangles[size_t(t)]) touched[size_t(x)] = 1;
        touched[size_t(e.u)] = touched[size_t(e.v)] = 1;
        break;
      }
    }
    if (!changed) break;
  }
  ctx.compact();
  return welded;
}

}  // namespace shellopt
