#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "shellopt/config.hpp"
#include "shellopt/io.hpp"
#include "shellopt/optimizer.hpp"

#ifdef SHELLOPT_HAVE_OPENMP
#include <omp.h>
#endif

namespace {

void apply_thread_count(const shellopt::RunConfig& cfg) {
#ifdef SHELLOPT_HAVE_OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#else
  (void)cfg;
#endif
}

int run_command(const std::string& config_path, const std::string& out,
                int threads, int export_every) {
  shellopt::RunConfig cfg = shellopt::parse_config_file(config_path);
  if (!out.empty()) cfg.output_dir = out;
  if (threads >= 0) cfg.threads = threads;
  if (export_every >= 0) cfg.export_every = export_every;
  apply_thread_count(cfg);

  shellopt::Optimizer opt(cfg);
  const shellopt::OptResult res = opt.run();

  std::printf("iterations:    %d%s%s\n", res.iterations_run,
              res.reached_stationary ? " (stationary)" : "",
              res.stalled ? " (stalled: every retry of the last step was "
                            "rejected; see trailing history rows)"
                          : "");
  std::printf("objective:     initial %s, best %s (iteration %d), final %s\n",
              shellopt::format_g9(res.objective_init).c_str(),
              shellopt::format_g9(res.objective_best).c_str(),
              res.best_iteration,
              shellopt::format_g9(res.objective_final).c_str());
  if (!cfg.output_dir.empty())
    std::printf("outputs:       %s\n", cfg.output_dir.c_str());
  return 0;
}

int check_command(const std::string& config_path) {
  shellopt::RunConfig cfg = shellopt::parse_config_file(config_path);
  cfg.output_dir.clear();  // diagnostics only, never write
  apply_thread_count(cfg);

  shellopt::Optimizer opt(cfg);
  const auto& grid = opt.grid();
  std::printf("grid:          %d x %d x %d nodes (spacing %s)\n", grid.nx(),
              grid.ny(), grid.nz(),
              shellopt::format_g9(grid.spacing()).c_str());
  std::printf("pinned nodes:  %d\n", opt.boundary_tags().dirichlet_count());

  const shellopt::Evaluation ev = opt.evaluate(opt.seed_design());
  std::printf("surface:       %d vertices, %d triangles, area %s\n",
              ev.stats.n_vertices, ev.stats.n_triangles,
              shellopt::format_g9(ev.stats.total_area).c_str());
  std::printf("mesh quality:  min angle %s deg, min edge %s\n",
              shellopt::format_g9(ev.stats.min_angle_deg).c_str(),
              shellopt::format_g9(ev.stats.min_edge_length).c_str());
  std::printf("topology:      euler %d, boundary loops %d, boundary edges %d\n",
              ev.stats.euler_characteristic, ev.stats.boundary_loops,
              ev.stats.boundary_edges);
  std::printf("cleanup:       %d collapsed, %d quality, %d skipped\n",
              ev.cleanup_stats.collapsed, ev.cleanup_stats.quality_collapsed,
              ev.cleanup_stats.skipped);
  std::printf("objective F:   %s\n",
              shellopt::format_g9(ev.objective).c_str());
  std::printf("volume:        %s", shellopt::format_g9(ev.volume).c_str());
  if (cfg.has_volume_constraint)
    std::printf("  (G = %s, bound %s)",
                shellopt::format_g9(ev.volume - cfg.max_volume).c_str(),
                shellopt::format_g9(cfg.max_volume).c_str());
  std::printf("\n");
  std::printf("median 1/|grad levelset| at vertices: %s\n",
              shellopt::format_g9(ev.median_inv_grad).c_str());
  return 0;
}

int export_command(const std::string& state_path, const std::string& out) {
  const shellopt::RunState state = shellopt::read_state(state_path);
  shellopt::RunConfig cfg = state.config;
  cfg.output_dir.clear();
  apply_thread_count(cfg);
  shellopt::Optimizer opt(cfg);

  const std::string dir = out.empty() ? std::string("export") : out;
  shellopt::ensure_directory(dir);
  auto emit = [&](const shellopt::NodalField& design, const std::string& tag) {
    const shellopt::Evaluation ev = opt.evaluate(design);
    shellopt::write_obj(dir + "/" + tag + ".obj", ev.mesh);
    shellopt::write_vtk_surface(dir + "/" + tag + "_surface.vtk", ev.mesh);
    shellopt::NamedFields fields = {{"design_filtered", &ev.fields.filtered},
                                    {"projected", &ev.fields.projected},
                                    {"levelset", &ev.fields.levelset}};
    shellopt::write_vtk_volume(dir + "/" + tag + "_volume.vtk", opt.grid(),
                               fields);
  };
  emit(state.design_final, "final");
  emit(state.design_best, "best");
  std::printf("re-emitted final + best meshes into %s (best iteration %d)\n",
              dir.c_str(), state.best_iteration);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-set midsurface optimizer for thin shells"};
  app.require_subcommand(1);

  std::string config_path, state_path, out;
  int threads = -1;
  int export_every = -1;
  unsigned seed = 0;

  CLI::App* run = app.add_subcommand("run", "Run an optimization");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--out", out, "Output directory (overrides config)");
  run->add_option("--threads", threads, "Worker threads (overrides config)");
  run->add_option("--seed", seed, "Reserved; runs are deterministic");
  run->add_option("--export-every", export_every,
                  "Dump meshes/fields every N iterations (overrides config)");

  CLI::App* check = app.add_subcommand(
      "check", "Validate a config and print iteration-0 diagnostics");
  check->add_option("config", config_path, "JSON config file")->required();

  CLI::App* exp =
      app.add_subcommand("export", "Re-emit meshes/fields from a state file");
  exp->add_option("state", state_path, "state.json from a finished run")
      ->required();
  exp->add_option("--out", out, "Output directory (default: export)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return run_command(config_path, out, threads, export_every);
    if (check->parsed()) return check_command(config_path);
    return export_command(state_path, out);
  } catch (const shellopt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const shellopt::StructureVanishedError& e) {
    std::fprintf(stderr, "structure vanished: %s\n", e.what());
    return 4;
  } catch (const shellopt::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
