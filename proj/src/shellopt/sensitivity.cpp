#include "shellopt/sensitivity.hpp"

#include <atomic>

#include "shellopt/pipeline.hpp"

namespace shellopt {

Eigen::VectorXd shape_sensitivity(const ShellModel& model,
                                  const Eigen::VectorXd& u, double step) {
  if (step <= 0.0) throw ConfigError("sensitivity step must be positive");
  const int nv = model.vertex_count();
  Eigen::VectorXd sens = Eigen::VectorXd::Zero(nv);
  const auto& incident = model.vertex_elements();

  // Exceptions must not escape the parallel loop, so per-probe failures are
  // counted here and converted to a single throw after the loop finishes.
  std::atomic<long> visits{0};
  std::atomic<long> skipped{0};
  std::atomic<bool> nonfinite{false};

#ifdef SHELLOPT_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (int v = 0; v < nv; ++v) {
    double acc = 0.0;
    for (int t : incident[v]) {
      visits.fetch_add(1, std::memory_order_relaxed);
      try {
        const ElemVec q = model.gather(u, t);
        const ElementGeom plus = model.element_geom_offset(t, v, step);
        const ElementGeom minus = model.element_geom_offset(t, v, -step);
        const ElemMat dK =
            (model.stiffness(plus) - model.stiffness(minus)) / (2.0 * step);
        const ElemVec df =
            (model.area_load_vector(plus) - model.area_load_vector(minus)) /
            (2.0 * step);
        acc += -0.5 * q.dot(dK * q) + q.dot(df);
      } catch (const NumericalError&) {
        // A probe can push a near-degenerate triangle through zero thickness
        // even though the unperturbed element solved fine. Such slivers carry
        // negligible energy, so dropping their contribution is harmless as
        // long as it stays rare (checked below).
        skipped.fetch_add(1, std::memory_order_relaxed);
      }
    }
    if (!std::isfinite(acc)) {
      nonfinite.store(true, std::memory_order_relaxed);
      acc = 0.0;
    }
    sens[v] = acc;
  }
  if (nonfinite.load()) throw NumericalError("non-finite shape sensitivity");
  const long bad = skipped.load();
  if (bad > std::max<long>(3, visits.load() / 100)) {
    throw NumericalError("shape sensitivity probes failed on " +
                         std::to_string(bad) + " of " +
                         std::to_string(visits.load()) + " element visits");
  }
  return sens;
}

Eigen::VectorXd embed_on_grid(const RegularGrid& grid, const ShellMesh& mesh,
                              const Eigen::VectorXd& vertex_values,
                              const std::vector<double>& vertex_area,
                              double scale, bool divide_by_node_volume) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.node_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const double amount = scale * vertex_values[v] * vertex_area[v];
    for (int k = 0; k < 4; ++k) {
      const double w = mesh.parent_weights[v][k];
      if (w == 0.0) continue;
      out[mesh.parent_nodes[v][k]] += amount * w;
    }
  }
  if (divide_by_node_volume)
    for (int n = 0; n < grid.node_count(); ++n) out[n] /= grid.weight(n);
  return out;
}

Eigen::VectorXd volume_constraint_gradient(const RegularGrid& grid,
                                           const HelmholtzFilter& filter,
                                           const NodalField& filtered,
                                           double bandwidth) {
  NodalField g(grid.node_count());
  for (int n = 0; n < grid.node_count(); ++n)
    g[n] = grid.weight(n) * heaviside_deriv(filtered[n], bandwidth);
  return filter.solve_dual(g);
}

}  // namespace shellopt
