#pragma once

#include <string>
#include <utility>
#include <vector>

#include "shellopt/config.hpp"
#include "shellopt/grid.hpp"
#include "shellopt/isosurface.hpp"

namespace shellopt {

// One row of history.csv (and one evaluated candidate design). Rejected
// trial steps are recorded with accepted = 0 and the objective of the last
// accepted iterate.
struct IterationRecord {
  int iter = 0;
  double objective = 0.0;       // F
  double constraint = 0.0;      // G (raw enclosed volume when unconstrained)
  double merit = 0.0;           // F'
  double barrier_weight = 0.0;  // gamma_p
  int n_vertices = 0;
  int n_triangles = 0;
  double median_inv_grad = 0.0;
  int accepted = 1;
  // Topology bookkeeping for change detection; not part of the CSV.
  int euler_characteristic = 0;
  int boundary_loops = 0;
  // Why a trial was rejected (exception message, or "volume infeasible");
  // empty for accepted rows. Not part of the CSV.
  std::string note;
};

// Doubles in all text outputs are printed with 9 significant digits.
std::string format_g9(double v);

std::string history_csv_text(const std::vector<IterationRecord>& rows);
void write_history_csv(const std::string& path,
                       const std::vector<IterationRecord>& rows);

std::string obj_text(const ShellMesh& mesh);
void write_obj(const std::string& path, const ShellMesh& mesh);

// Legacy VTK structured-points file with one scalar array per named field.
using NamedFields = std::vector<std::pair<std::string, const NodalField*>>;
void write_vtk_volume(const std::string& path, const RegularGrid& grid,
                      const NamedFields& fields);

// Legacy VTK polydata file for the surface, with directors as point normals
// and optional per-vertex scalar arrays.
using NamedVertexData =
    std::vector<std::pair<std::string, const Eigen::VectorXd*>>;
void write_vtk_surface(const std::string& path, const ShellMesh& mesh,
                       const NamedVertexData& data = {});

// Run state: enough to re-derive every exported artifact byte-identically.
// Designs are stored at full precision (exact double round-trip); the
// 9-digit rule applies to the diff-oriented text formats above.
struct RunState {
  RunConfig config;
  NodalField design_final;
  NodalField design_best;
  int best_iteration = -1;
};

void write_state(const std::string& path, const RunState& state);
RunState read_state(const std::string& path);

void ensure_directory(const std::string& path);

}  // namespace shellopt
