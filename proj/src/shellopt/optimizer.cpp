#include "shellopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "shellopt/design_init.hpp"
#include "shellopt/sensitivity.hpp"

namespace shellopt {

namespace {

std::vector<uint8_t> pin_mask(const BoundaryTag& tags) {
  if (tags.dirichlet_count() == 0) return {};
  return tags.on_dirichlet;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

constexpr double kGammaFloor = 1e-12;

}  // namespace

Optimizer::Optimizer(const RunConfig& cfg)
    : cfg_(cfg),
      grid_(cfg.origin, cfg.size, cfg.spacing),
      tags_(tag_boundary(grid_, cfg.levelset_pins)),
      pipeline_(grid_, tags_, cfg.filter_radius, cfg.projection_band),
      sens_filter_(grid_, cfg.sensitivity_radius, pin_mask(tags_)),
      seed_(init_design(grid_, cfg.shape)) {
  pipeline_.set_seed(seed_);
}

std::unique_ptr<ShellModel> Optimizer::build_model(
    const ShellMesh& mesh) const {
  auto model =
      std::make_unique<ShellModel>(mesh, cfg_.material, cfg_.thickness);
  for (const SupportSpec& s : cfg_.supports) model->add_support(s.box, s.clamp);
  for (const SymmetrySpec& s : cfg_.symmetry_planes)
    model->add_symmetry_plane(s.axis, s.value, 1e-6 * cfg_.spacing);
  if (cfg_.has_area_load) model->add_area_load(cfg_.area_load);
  for (const EdgeLoadSpec& e : cfg_.edge_loads)
    model->add_edge_load(e.box, e.total_force);
  return model;
}

Evaluation Optimizer::evaluate(const NodalField& design) const {
  Evaluation ev;
  ev.fields = pipeline_.evaluate(design);
  ev.mesh = extract_isosurface(grid_, ev.fields.levelset, cfg_.snap_tol);
  if (ev.mesh.triangles.empty())
    throw StructureVanishedError(
        "the level set has no zero surface left in the design domain");
  ev.cleanup_stats = cleanup(ev.mesh, cfg_.min_edge, cfg_.min_angle_deg);
  if (!cfg_.supports.empty()) {
    // Components that reach no support are floating rigid bodies; analyzing
    // them is meaningless (singular stiffness), so the shell model sees only
    // the anchored part. Their enclosed volume still counts, which lets a
    // volume barrier shrink them away.
    ev.dropped_triangles =
        drop_unanchored_components(ev.mesh, [this](const Vec3& p) {
          for (const SupportSpec& s : cfg_.supports)
            if (s.box.contains(p, 1e-9)) return true;
          return false;
        });
    if (ev.mesh.triangles.empty())
      throw StructureVanishedError(
          "no part of the zero surface reaches a support");
  }
  // Weld pinch bridges: a triangle whose directors are nearly tangent to it
  // does not sample one sheet of the surface — it spans two sheets that are
  // about to fuse, and its thickness extrusion folds. Collapsing such
  // triangles performs the fusion at mesh resolution; re-tidy and refresh the
  // directors until none are left.
  constexpr double kWeldCos = 0.05;
  for (int round = 0;; ++round) {
    compute_vertex_normals(grid_, ev.fields.levelset, ev.mesh);
    if (round >= 8) break;
    const int welded = collapse_folded_triangles(ev.mesh, kWeldCos);
    if (welded == 0) break;
    ev.welded_triangles += welded;
    cleanup(ev.mesh, cfg_.min_edge, cfg_.min_angle_deg);
    if (ev.mesh.triangles.empty())
      throw StructureVanishedError("welding pinched sheets consumed the mesh");
  }
  ev.stats = mesh_stats(ev.mesh);
  ev.volume = pipeline_.enclosed_volume_of_projected(ev.fields.projected);

  const std::vector<Vec3> grads = node_gradients(grid_, ev.fields.levelset);
  std::vector<double> inv;
  inv.reserve(ev.mesh.vertices.size());
  for (const Vec3& v : ev.mesh.vertices) {
    const double m = sample_gradient(grid_, grads, v).norm();
    inv.push_back(1.0 / std::max(m, 1e-12));
  }
  ev.median_inv_grad = median_of(std::move(inv));

  ev.model = build_model(ev.mesh);
  ev.fe = ev.model->solve();
  ev.objective = ev.fe.compliance;
  return ev;
}

Optimizer::Gradients Optimizer::compute_gradients(const Evaluation& ev) const {
  Gradients g;
  g.surface =
      shape_sensitivity(*ev.model, ev.fe.displacement, 1e-6 * grid_.spacing());
  const std::vector<double> areas = lumped_vertex_areas(ev.mesh);
  // The level set decreases along the director, so raising the design field
  // moves the surface along the director; the per-length surface derivative
  // therefore converts to a per-design-value derivative with a positive
  // factor (embed_scale approximates the length moved per unit level set
  // change).
  g.objective_raw = embed_on_grid(grid_, ev.mesh, g.surface, areas,
                                  cfg_.embed_scale, cfg_.normalize_embed);
  g.objective = sens_filter_.apply(g.objective_raw);
  g.objective_l1 = g.objective.lpNorm<1>();
  if (cfg_.has_volume_constraint) {
    g.constraint = volume_constraint_gradient(
        grid_, pipeline_.design_filter(), ev.fields.filtered,
        pipeline_.bandwidth());
    g.constraint_l1 = g.constraint.lpNorm<1>();
  }
  return g;
}

NodalField Optimizer::step(const NodalField& design, const Gradients& g,
                           double gamma, double G, double alpha) const {
  NodalField next(design.size());
  const bool constrained = cfg_.has_volume_constraint;
  for (int n = 0; n < grid_.node_count(); ++n) {
    if (!tags_.on_dirichlet.empty() && tags_.on_dirichlet[n]) {
      next[n] = design[n];  // pinned regions keep their seed design
      continue;
    }
    double d = g.objective[n];
    if (constrained && gamma > 0.0) d += gamma / (G * G) * g.constraint[n];
    next[n] = std::clamp(design[n] - alpha * d, -1.0, 1.0);
  }
  return next;
}

void Optimizer::export_iteration(int iter, const Evaluation& ev,
                                 const Gradients& g) const {
  char sub[32];
  std::snprintf(sub, sizeof(sub), "iter_%04d", iter);
  const std::string dir = cfg_.output_dir + "/" + sub;
  ensure_directory(dir);
  write_obj(dir + "/surface.obj", ev.mesh);
  NamedVertexData vertex_data;
  if (g.surface.size() == ev.mesh.vertex_count())
    vertex_data.push_back({"shape_sens", &g.surface});
  write_vtk_surface(dir + "/surface.vtk", ev.mesh, vertex_data);
  NamedFields fields = {{"design_filtered", &ev.fields.filtered},
                        {"projected", &ev.fields.projected},
                        {"levelset", &ev.fields.levelset},
                        {"sens_raw", &g.objective_raw},
                        {"sens_filtered", &g.objective}};
  write_vtk_volume(dir + "/volume.vtk", grid_, fields);
}

OptResult Optimizer::run() {
  const bool constrained = cfg_.has_volume_constraint;
  const bool writing = !cfg_.output_dir.empty();
  if (writing) ensure_directory(cfg_.output_dir);

  NodalField design = seed_;
  Evaluation ev = evaluate(design);
  double G = constrained ? ev.volume - cfg_.max_volume : ev.volume;
  if (constrained && G >= 0.0)
    throw ConfigError("initial design violates the volume constraint");

  Gradients grads = compute_gradients(ev);
  double gamma = 0.0;
  if (constrained) {
    if (grads.constraint_l1 <= 0.0)
      throw ConfigError(
          "volume constraint gradient is zero; drop the constraint block "
          "instead of running with an inactive constraint");
    gamma = grads.objective_l1 == 0.0
                ? 0.0
                : G * G * grads.objective_l1 / grads.constraint_l1;
  }
  double merit = constrained ? ev.objective - gamma / G : ev.objective;

  OptResult res;
  res.objective_init = ev.objective;
  res.design_best = design;
  res.objective_best = ev.objective;
  res.best_iteration = 0;
  ShellMesh mesh_best = ev.mesh;

  auto record = [&](int iter, double objective, double constraint,
                    double merit_value, int accepted, const Evaluation& at,
                    std::string note = {}) {
    IterationRecord r;
    r.iter = iter;
    r.objective = objective;
    r.constraint = constraint;
    r.merit = merit_value;
    r.barrier_weight = gamma;
    r.n_vertices = at.stats.n_vertices;
    r.n_triangles = at.stats.n_triangles;
    r.median_inv_grad = at.median_inv_grad;
    r.accepted = accepted;
    r.euler_characteristic = at.stats.euler_characteristic;
    r.boundary_loops = at.stats.boundary_loops;
    r.note = std::move(note);
    res.history.push_back(r);
  };

  record(0, ev.objective, G, merit, 1, ev);
  std::vector<double> accepted_merits = {merit};
  if (writing && cfg_.export_every > 0) export_iteration(0, ev, grads);

  int last_iter = 0;
  for (int iter = 1; iter <= cfg_.max_iters; ++iter) {
    last_iter = iter;
    double alpha = cfg_.step_size;
    NodalField trial;
    Evaluation trial_ev;
    Gradients trial_grads;
    bool stepped = false;
    for (int attempt = 0; attempt < 6; ++attempt) {
      trial = step(design, grads, gamma, G, alpha);
      const double trial_vol = pipeline_.enclosed_volume(trial);
      const double trial_G =
          constrained ? trial_vol - cfg_.max_volume : trial_vol;
      if (constrained && trial_G >= 0.0) {
        record(iter, ev.objective, trial_G, merit, 0, ev, "volume infeasible");
        alpha *= 0.5;
        continue;
      }
      // A trial is usable only if its shell can be extracted, solved, and
      // differentiated; any failure rejects it like an infeasible volume.
      try {
        trial_ev = evaluate(trial);
        trial_grads = compute_gradients(trial_ev);
      } catch (const StructureVanishedError& e) {
        record(iter, ev.objective, trial_G, merit, 0, ev, e.what());
        alpha *= 0.5;
        continue;
      } catch (const NumericalError& e) {
        record(iter, ev.objective, trial_G, merit, 0, ev, e.what());
        alpha *= 0.5;
        continue;
      } catch (const ConfigError& e) {
        // The seed model built fine, so a config failure on a trial mesh
        // means the surviving surface no longer offers the geometry a load
        // or support needs (e.g. it pulled away from an edge-load box).
        record(iter, ev.objective, trial_G, merit, 0, ev, e.what());
        alpha *= 0.5;
        continue;
      }
      stepped = true;
      break;
    }
    if (!stepped) {
      // Every retry failed: keep the history (the trailing rejected rows show
      // what was tried) and stop instead of discarding the run.
      res.stalled = true;
      last_iter = iter - 1;
      break;
    }

    design = trial;
    ev = std::move(trial_ev);
    G = constrained ? ev.volume - cfg_.max_volume : ev.volume;
    grads = std::move(trial_grads);
    merit = constrained ? ev.objective - gamma / G : ev.objective;
    record(iter, ev.objective, G, merit, 1, ev);
    accepted_merits.push_back(merit);

    if (ev.objective < res.objective_best) {
      res.objective_best = ev.objective;
      res.design_best = design;
      res.best_iteration = iter;
      mesh_best = ev.mesh;
    }

    if (writing && cfg_.export_every > 0 && iter % cfg_.export_every == 0)
      export_iteration(iter, ev, grads);

    // Barrier schedule: halve when the merit is flat while the constraint is
    // comfortably inactive.
    if (constrained && gamma > kGammaFloor) {
      const double prev = accepted_merits[accepted_merits.size() - 2];
      const double rel =
          std::abs(merit - prev) / std::max(std::abs(prev), 1e-300);
      if (rel < 0.001 && G < -0.01) gamma = std::max(0.5 * gamma, kGammaFloor);
    }

    // Stationarity: merit flat across the last 5 accepted iterates with the
    // barrier weight done decreasing.
    const bool gamma_done = !constrained || gamma <= kGammaFloor;
    if (gamma_done && accepted_merits.size() >= 5) {
      bool flat = true;
      for (size_t i = accepted_merits.size() - 4; i < accepted_merits.size();
           ++i) {
        const double prev = std::max(std::abs(accepted_merits[i - 1]), 1e-300);
        if (std::abs(accepted_merits[i] - accepted_merits[i - 1]) >
            1e-4 * prev) {
          flat = false;
          break;
        }
      }
      if (flat) {
        res.reached_stationary = true;
        break;
      }
    }
  }

  res.design_final = design;
  res.objective_final = ev.objective;
  res.iterations_run = last_iter;

  if (writing) {
    write_history_csv(cfg_.output_dir + "/history.csv", res.history);
    write_obj(cfg_.output_dir + "/final.obj", ev.mesh);
    write_obj(cfg_.output_dir + "/best.obj", mesh_best);
    RunState state;
    state.config = cfg_;
    state.design_final = design;
    state.design_best = res.design_best;
    state.best_iteration = res.best_iteration;
    write_state(cfg_.output_dir + "/state.json", state);
  }
  return res;
}

}  // namespace shellopt
