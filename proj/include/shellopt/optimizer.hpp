#pragma once

#include <memory>
#include <string>
#include <vector>

#include "shellopt/config.hpp"
#include "shellopt/grid.hpp"
#include "shellopt/helmholtz.hpp"
#include "shellopt/io.hpp"
#include "shellopt/isosurface.hpp"
#include "shellopt/pipeline.hpp"
#include "shellopt/shell_fem.hpp"

namespace shellopt {

// One full evaluation of a candidate design: level set chain, surface
// extraction + cleanup, directors, shell solve.
struct Evaluation {
  PipelineFields fields;
  ShellMesh mesh;
  MeshStats stats;
  CleanupStats cleanup_stats;
  double objective = 0.0;       // strain energy of the solved shell
  double volume = 0.0;          // enclosed volume of the projected field
  double median_inv_grad = 0.0; // median of 1/|grad levelset| at vertices
  int dropped_triangles = 0;    // floating-component triangles removed
  int welded_triangles = 0;     // pinch-bridge collapses (sheet fusion)
  FeResult fe;
  std::unique_ptr<ShellModel> model;
};

struct OptResult {
  std::vector<IterationRecord> history;
  NodalField design_final;
  NodalField design_best;
  double objective_init = 0.0;
  double objective_best = 0.0;
  double objective_final = 0.0;
  int best_iteration = 0;
  int iterations_run = 0;
  bool reached_stationary = false;
  // True when a whole retry ladder (6 attempts with halved steps) produced
  // no usable iterate and the run stopped early; the failed attempts are the
  // trailing rejected rows of `history`.
  bool stalled = false;
};

// Steepest-descent loop on the design field with an interior-point barrier
// for the optional enclosed-volume bound:
//
//   merit F' = F - barrier_weight / G,  G = volume - max_volume < 0
//
// The barrier weight starts at G^2 |dF|_1 / |dG|_1, is halved whenever the
// merit change rate drops below 0.001 while G < -0.01, and never goes below
// 1e-12. Steps that would leave the feasible region (or whose shell cannot
// be extracted, solved, and differentiated) are rejected with the step size
// halved, up to 5 retries; if every retry fails the run stops and returns
// what it has, with `stalled` set. The run otherwise terminates at max_iters
// or when the merit is flat (relative change < 1e-4 across the last 5
// accepted iterates) with the barrier weight at its floor.
class Optimizer {
public:
  explicit Optimizer(const RunConfig& cfg);

  // Full chain at one design; throws StructureVanishedError when the level
  // set has no zero surface left.
  Evaluation evaluate(const NodalField& design) const;

  // Runs the loop; writes history.csv, state.json and per-iteration dumps
  // into cfg.output_dir unless it is empty.
  OptResult run();

  const RegularGrid& grid() const { return grid_; }
  const BoundaryTag& boundary_tags() const { return tags_; }
  const LevelSetPipeline& pipeline() const { return pipeline_; }
  const NodalField& seed_design() const { return seed_; }
  const RunConfig& config() const { return cfg_; }

  // Gradient of the objective (and constraint) with respect to the design
  // field, evaluated at `ev`. Exposed for the oracle tests.
  struct Gradients {
    Eigen::VectorXd surface;     // per-vertex normal-offset derivative of F
    NodalField objective_raw;    // embedded, before smoothing
    NodalField objective;        // dF/dpsi (smoothed, zero on pinned nodes)
    NodalField constraint;       // dG/dpsi (empty when unconstrained)
    double objective_l1 = 0.0;
    double constraint_l1 = 0.0;
  };
  Gradients compute_gradients(const Evaluation& ev) const;

private:
  RunConfig cfg_;
  RegularGrid grid_;
  BoundaryTag tags_;
  LevelSetPipeline pipeline_;
  HelmholtzFilter sens_filter_;  // pinned to zero on the level set pin nodes
  NodalField seed_;

  std::unique_ptr<ShellModel> build_model(const ShellMesh& mesh) const;
  NodalField step(const NodalField& design, const Gradients& g, double gamma,
                  double G, double alpha) const;
  void export_iteration(int iter, const Evaluation& ev,
                        const Gradients& g) const;
};

}  // namespace shellopt
