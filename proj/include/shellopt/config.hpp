#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shellopt/common.hpp"
#include "shellopt/design_init.hpp"
#include "shellopt/grid.hpp"
#include "shellopt/shell_fem.hpp"

namespace shellopt {

struct SupportSpec {
  Box box;
  bool clamp = true;  // false: pin (translations only)
};

struct EdgeLoadSpec {
  Box box;
  Vec3 total_force = Vec3::Zero();
};

struct SymmetrySpec {
  int axis = 0;
  double value = 0.0;
};

// Fully validated run description. Defaults are materialized at parse time,
// so serializing a parsed config captures the complete effective setup.
struct RunConfig {
  // domain / grid
  Vec3 origin = Vec3::Zero();
  Vec3 size = Vec3::Ones();
  double spacing = 0.05;

  // seed design
  InitShape shape;

  // smoothing / projection
  double filter_radius = 0.05;       // first + second level set smoother
  double sensitivity_radius = 0.05;  // gradient smoother
  double projection_band = 0.5;      // bounded projection bandwidth

  // shell analysis
  Material material{1e5, 0.3};
  double thickness = 0.01;

  // regions where the level set is held at its seed values
  std::vector<Box> levelset_pins;

  // structural boundary conditions and loads
  std::vector<SupportSpec> supports;
  std::vector<SymmetrySpec> symmetry_planes;
  bool has_area_load = false;
  Vec3 area_load = Vec3::Zero();
  std::vector<EdgeLoadSpec> edge_loads;

  // enclosed-volume bound (interior-point constraint); absent -> unconstrained
  bool has_volume_constraint = false;
  double max_volume = 0.0;

  // optimizer
  double step_size = 100.0;   // steepest-descent rate
  double embed_scale = 15.0;  // surface-to-grid sensitivity conversion
  int max_iters = 50;
  bool normalize_embed = true;  // divide grid deposits by node volume

  // extraction / cleanup
  double snap_tol = 0.05;
  double min_edge = 0.025;
  double min_angle_deg = 10.0;

  // runtime
  int threads = 0;  // 0 = library/runtime default
  std::string output_dir = "out";
  int export_every = 1;  // 0 = no per-iteration dumps
  uint32_t rng_seed = 0;  // reserved; the pipeline itself is deterministic
};

// Parses and validates; throws ConfigError naming the offending key.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Canonical JSON serialization of a validated config (stable key order,
// exact double round-trip). parse_config_text(config_to_json(c)) == c.
std::string config_to_json(const RunConfig& cfg);

void validate_config(const RunConfig& cfg);

}  // namespace shellopt
