#include "shellopt/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace shellopt {

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << text;
  if (!out) throw ConfigError("failed writing output file: " + path);
}

}  // namespace

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string history_csv_text(const std::vector<IterationRecord>& rows) {
  std::ostringstream out;
  out << "iter,F,G,F_prime,gamma_p,n_vertices,n_triangles,"
         "median_inv_grad_phi,accepted\n";
  for (const IterationRecord& r : rows) {
    out << r.iter << ',' << format_g9(r.objective) << ','
        << format_g9(r.constraint) << ',' << format_g9(r.merit) << ','
        << format_g9(r.barrier_weight) << ',' << r.n_vertices << ','
        << r.n_triangles << ',' << format_g9(r.median_inv_grad) << ','
        << r.accepted << '\n';
  }
  return out.str();
}

void write_history_csv(const std::string& path,
                       const std::vector<IterationRecord>& rows) {
  write_text(path, history_csv_text(rows));
}

std::string obj_text(const ShellMesh& mesh) {
  std::ostringstream out;
  for (const Vec3& v : mesh.vertices)
    out << "v " << format_g9(v[0]) << ' ' << format_g9(v[1]) << ' '
        << format_g9(v[2]) << '\n';
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  return out.str();
}

void write_obj(const std::string& path, const ShellMesh& mesh) {
  write_text(path, obj_text(mesh));
}

void write_vtk_volume(const std::string& path, const RegularGrid& grid,
                      const NamedFields& fields) {
  std::ostringstream out;
  out << "# vtk DataFile Version 3.0\n";
  out << "design domain fields\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << grid.nx() << ' ' << grid.ny() << ' ' << grid.nz()
      << '\n';
  out << "ORIGIN " << format_g9(grid.origin()[0]) << ' '
      << format_g9(grid.origin()[1]) << ' ' << format_g9(grid.origin()[2])
      << '\n';
  out << "SPACING " << format_g9(grid.spacing()) << ' '
      << format_g9(grid.spacing()) << ' ' << format_g9(grid.spacing()) << '\n';
  out << "POINT_DATA " << grid.node_count() << '\n';
  for (const auto& [name, field] : fields) {
    out << "SCALARS " << name << " double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (int n = 0; n < grid.node_count(); ++n) {
      out << format_g9((*field)[n]);
      out << ((n % 6 == 5 || n + 1 == grid.node_count()) ? '\n' : ' ');
    }
  }
  write_text(path, out.str());
}

void write_vtk_surface(const std::string& path, const ShellMesh& mesh,
                       const NamedVertexData& data) {
  std::ostringstream out;
  out << "# vtk DataFile Version 3.0\n";
  out << "shell midsurface\n";
  out << "ASCII\n";
  out << "DATASET POLYDATA\n";
  out << "POINTS " << mesh.vertex_count() << " double\n";
  for (const Vec3& v : mesh.vertices)
    out << format_g9(v[0]) << ' ' << format_g9(v[1]) << ' ' << format_g9(v[2])
        << '\n';
  out << "POLYGONS " << mesh.triangle_count() << ' '
      << 4 * mesh.triangle_count() << '\n';
  for (const auto& t : mesh.triangles)
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  if (mesh.normals.empty() && data.empty()) {
    write_text(path, out.str());
    return;
  }
  out << "POINT_DATA " << mesh.vertex_count() << '\n';
  if (!mesh.normals.empty()) {
    out << "NORMALS director double\n";
    for (const Vec3& n : mesh.normals)
      out << format_g9(n[0]) << ' ' << format_g9(n[1]) << ' '
          << format_g9(n[2]) << '\n';
  }
  for (const auto& [name, values] : data) {
    out << "SCALARS " << name << " double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (int v = 0; v < mesh.vertex_count(); ++v)
      out << format_g9((*values)[v]) << '\n';
  }
  write_text(path, out.str());
}

void write_state(const std::string& path, const RunState& state) {
  nlohmann::ordered_json root;
  root["config"] = nlohmann::ordered_json::parse(config_to_json(state.config));
  root["best_iteration"] = state.best_iteration;
  auto field_json = [](const NodalField& f) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < f.size(); ++i) arr.push_back(f[i]);
    return arr;
  };
  root["design_final"] = field_json(state.design_final);
  root["design_best"] = field_json(state.design_best);
  write_text(path, root.dump(2) + "\n");
}

RunState read_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open state file: " + path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("state file is not valid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("config") ||
      !root.contains("design_final") || !root.contains("design_best"))
    throw ConfigError("state file is missing config/design fields");

  RunState state;
  state.config = parse_config_text(root["config"].dump());
  state.best_iteration = root.value("best_iteration", -1);
  auto read_field = [&](const char* key) {
    const nlohmann::json& arr = root[key];
    if (!arr.is_array())
      throw ConfigError(std::string("state field is not an array: ") + key);
    NodalField f(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) f[i] = arr[i].get<double>();
    return f;
  };
  state.design_final = read_field("design_final");
  state.design_best = read_field("design_best");
  return state;
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw ConfigError("cannot create directory " + path + ": " + ec.message());
}

}  // namespace shellopt
