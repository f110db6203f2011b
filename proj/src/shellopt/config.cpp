#include "shellopt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace shellopt {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) fail("unknown key \"" + where + "." + key + "\"");
  }
}

const json& require(const json& j, const std::string& where,
                    const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) fail("missing required key \"" + where + "." + key + "\"");
  return *it;
}

double get_number(const json& j, const std::string& name) {
  if (!j.is_number()) fail("\"" + name + "\" must be a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& name) {
  if (!j.is_number_integer()) fail("\"" + name + "\" must be an integer");
  return j.get<int>();
}

bool get_bool(const json& j, const std::string& name) {
  if (!j.is_boolean()) fail("\"" + name + "\" must be a boolean");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& name) {
  if (!j.is_string()) fail("\"" + name + "\" must be a string");
  return j.get<std::string>();
}

Vec3 get_vec3(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 3)
    fail("\"" + name + "\" must be an array of 3 numbers");
  Vec3 v;
  for (int a = 0; a < 3; ++a) v[a] = get_number(j[a], name);
  return v;
}

Box get_box(const json& j, const std::string& name) {
  check_keys(j, name, {"lo", "hi"});
  Box b;
  b.lo = get_vec3(require(j, name, "lo"), name + ".lo");
  b.hi = get_vec3(require(j, name, "hi"), name + ".hi");
  for (int a = 0; a < 3; ++a)
    if (b.lo[a] > b.hi[a]) fail("\"" + name + "\": lo exceeds hi");
  return b;
}

void parse_design(const json& j, RunConfig& cfg) {
  const std::string kind = get_string(require(j, "design", "shape"),
                                      "design.shape");
  std::set<std::string> allowed = {"shape", "band", "perturb"};
  if (kind == "plane") {
    cfg.shape.kind = InitShape::Kind::kPlane;
    allowed.insert("z0");
    cfg.shape.z0 = get_number(require(j, "design", "z0"), "design.z0");
  } else if (kind == "dome") {
    cfg.shape.kind = InitShape::Kind::kDome;
    allowed.insert({"center", "radius"});
    cfg.shape.center =
        get_vec3(require(j, "design", "center"), "design.center");
    cfg.shape.radius =
        get_number(require(j, "design", "radius"), "design.radius");
  } else if (kind == "cylinder") {
    cfg.shape.kind = InitShape::Kind::kCylinder;
    allowed.insert({"center", "radius", "axis"});
    cfg.shape.center =
        get_vec3(require(j, "design", "center"), "design.center");
    cfg.shape.radius =
        get_number(require(j, "design", "radius"), "design.radius");
    cfg.shape.axis = get_int(require(j, "design", "axis"), "design.axis");
  } else {
    fail("design.shape must be \"plane\", \"dome\" or \"cylinder\"");
  }
  check_keys(j, "design", allowed);
  if (j.contains("band"))
    cfg.shape.d_norm = get_number(j["band"], "design.band");
  if (j.contains("perturb")) {
    const json& p = j["perturb"];
    check_keys(p, "design.perturb", {"amplitude", "modes", "seed"});
    cfg.shape.perturb_amplitude =
        get_number(require(p, "design.perturb", "amplitude"),
                   "design.perturb.amplitude");
    cfg.shape.perturb_modes =
        get_int(require(p, "design.perturb", "modes"), "design.perturb.modes");
    if (p.contains("seed"))
      cfg.shape.perturb_seed =
          uint32_t(get_int(p["seed"], "design.perturb.seed"));
  }
}

RunConfig parse_json(const json& root) {
  if (!root.is_object()) fail("config root must be a JSON object");
  check_keys(root, "config",
             {"domain", "design", "filters", "shell", "levelset_pins",
              "supports", "symmetry", "loads", "constraint", "optimizer",
              "extraction", "runtime"});
  RunConfig cfg;

  const json& dom = require(root, "config", "domain");
  check_keys(dom, "domain", {"origin", "size", "spacing"});
  if (dom.contains("origin"))
    cfg.origin = get_vec3(dom["origin"], "domain.origin");
  cfg.size = get_vec3(require(dom, "domain", "size"), "domain.size");
  cfg.spacing = get_number(require(dom, "domain", "spacing"), "domain.spacing");

  parse_design(require(root, "config", "design"), cfg);

  cfg.filter_radius = cfg.spacing;
  cfg.sensitivity_radius = cfg.spacing;
  if (root.contains("filters")) {
    const json& f = root["filters"];
    check_keys(f, "filters",
               {"design_radius", "sensitivity_radius", "projection_band"});
    if (f.contains("design_radius")) {
      cfg.filter_radius = get_number(f["design_radius"], "filters.design_radius");
      cfg.sensitivity_radius = cfg.filter_radius;
    }
    if (f.contains("sensitivity_radius"))
      cfg.sensitivity_radius =
          get_number(f["sensitivity_radius"], "filters.sensitivity_radius");
    if (f.contains("projection_band"))
      cfg.projection_band =
          get_number(f["projection_band"], "filters.projection_band");
  }

  if (root.contains("shell")) {
    const json& s = root["shell"];
    check_keys(s, "shell", {"youngs", "poisson", "thickness"});
    if (s.contains("youngs"))
      cfg.material.youngs = get_number(s["youngs"], "shell.youngs");
    if (s.contains("poisson"))
      cfg.material.poisson = get_number(s["poisson"], "shell.poisson");
    if (s.contains("thickness"))
      cfg.thickness = get_number(s["thickness"], "shell.thickness");
  }

  if (root.contains("levelset_pins")) {
    const json& pins = root["levelset_pins"];
    if (!pins.is_array()) fail("\"levelset_pins\" must be an array of boxes");
    for (size_t i = 0; i < pins.size(); ++i)
      cfg.levelset_pins.push_back(
          get_box(pins[i], "levelset_pins[" + std::to_string(i) + "]"));
  }

  if (root.contains("supports")) {
    const json& sup = root["supports"];
    if (!sup.is_array()) fail("\"supports\" must be an array");
    for (size_t i = 0; i < sup.size(); ++i) {
      const std::string where = "supports[" + std::to_string(i) + "]";
      check_keys(sup[i], where, {"box", "type"});
      SupportSpec spec;
      spec.box = get_box(require(sup[i], where, "box"), where + ".box");
      const std::string type =
          get_string(require(sup[i], where, "type"), where + ".type");
      if (type == "clamp")
        spec.clamp = true;
      else if (type == "pin")
        spec.clamp = false;
      else
        fail(where + ".type must be \"clamp\" or \"pin\"");
      cfg.supports.push_back(spec);
    }
  }

  if (root.contains("symmetry")) {
    const json& sym = root["symmetry"];
    if (!sym.is_array()) fail("\"symmetry\" must be an array");
    for (size_t i = 0; i < sym.size(); ++i) {
      const std::string where = "symmetry[" + std::to_string(i) + "]";
      check_keys(sym[i], where, {"axis", "value"});
      SymmetrySpec spec;
      spec.axis = get_int(require(sym[i], where, "axis"), where + ".axis");
      spec.value = get_number(require(sym[i], where, "value"), where + ".value");
      cfg.symmetry_planes.push_back(spec);
    }
  }

  if (root.contains("loads")) {
    const json& loads = root["loads"];
    check_keys(loads, "loads", {"area", "edges"});
    if (loads.contains("area")) {
      cfg.has_area_load = true;
      cfg.area_load = get_vec3(loads["area"], "loads.area");
    }
    if (loads.contains("edges")) {
      const json& edges = loads["edges"];
      if (!edges.is_array()) fail("\"loads.edges\" must be an array");
      for (size_t i = 0; i < edges.size(); ++i) {
        const std::string where = "loads.edges[" + std::to_string(i) + "]";
        check_keys(edges[i], where, {"box", "total"});
        EdgeLoadSpec spec;
        spec.box = get_box(require(edges[i], where, "box"), where + ".box");
        spec.total_force =
            get_vec3(require(edges[i], where, "total"), where + ".total");
        cfg.edge_loads.push_back(spec);
      }
    }
  }

  if (root.contains("constraint")) {
    const json& c = root["constraint"];
    check_keys(c, "constraint", {"max_volume"});
    cfg.has_volume_constraint = true;
    cfg.max_volume =
        get_number(require(c, "constraint", "max_volume"), "constraint.max_volume");
  }

  if (root.contains("optimizer")) {
    const json& o = root["optimizer"];
    check_keys(o, "optimizer",
               {"step_size", "embed_scale", "max_iters", "normalize_embed"});
    if (o.contains("step_size"))
      cfg.step_size = get_number(o["step_size"], "optimizer.step_size");
    if (o.contains("embed_scale"))
      cfg.embed_scale = get_number(o["embed_scale"], "optimizer.embed_scale");
    if (o.contains("max_iters"))
      cfg.max_iters = get_int(o["max_iters"], "optimizer.max_iters");
    if (o.contains("normalize_embed"))
      cfg.normalize_embed =
          get_bool(o["normalize_embed"], "optimizer.normalize_embed");
  }

  if (root.contains("extraction")) {
    const json& e = root["extraction"];
    check_keys(e, "extraction", {"snap_tol", "min_edge", "min_angle"});
    if (e.contains("snap_tol"))
      cfg.snap_tol = get_number(e["snap_tol"], "extraction.snap_tol");
    if (e.contains("min_edge"))
      cfg.min_edge = get_number(e["min_edge"], "extraction.min_edge");
    if (e.contains("min_angle"))
      cfg.min_angle_deg = get_number(e["min_angle"], "extraction.min_angle");
  }

  if (root.contains("runtime")) {
    const json& r = root["runtime"];
    check_keys(r, "runtime", {"threads", "output_dir", "export_every", "seed"});
    if (r.contains("threads"))
      cfg.threads = get_int(r["threads"], "runtime.threads");
    if (r.contains("output_dir"))
      cfg.output_dir = get_string(r["output_dir"], "runtime.output_dir");
    if (r.contains("export_every"))
      cfg.export_every = get_int(r["export_every"], "runtime.export_every");
    if (r.contains("seed"))
      cfg.rng_seed = uint32_t(get_int(r["seed"], "runtime.seed"));
  }

  validate_config(cfg);
  return cfg;
}

ordered_json vec3_json(const Vec3& v) { return ordered_json::array({v[0], v[1], v[2]}); }

ordered_json box_json(const Box& b) {
  ordered_json j;
  j["lo"] = vec3_json(b.lo);
  j["hi"] = vec3_json(b.hi);
  return j;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_json(root);
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
  ordered_json root;

  root["domain"] = {{"origin", vec3_json(cfg.origin)},
                    {"size", vec3_json(cfg.size)},
                    {"spacing", cfg.spacing}};

  ordered_json design;
  switch (cfg.shape.kind) {
    case InitShape::Kind::kPlane:
      design["shape"] = "plane";
      design["z0"] = cfg.shape.z0;
      break;
    case InitShape::Kind::kDome:
      design["shape"] = "dome";
      design["center"] = vec3_json(cfg.shape.center);
      design["radius"] = cfg.shape.radius;
      break;
    case InitShape::Kind::kCylinder:
      design["shape"] = "cylinder";
      design["center"] = vec3_json(cfg.shape.center);
      design["radius"] = cfg.shape.radius;
      design["axis"] = cfg.shape.axis;
      break;
  }
  design["band"] = cfg.shape.d_norm;
  if (cfg.shape.perturb_amplitude > 0.0 && cfg.shape.perturb_modes > 0) {
    design["perturb"] = {{"amplitude", cfg.shape.perturb_amplitude},
                         {"modes", cfg.shape.perturb_modes},
                         {"seed", cfg.shape.perturb_seed}};
  }
  root["design"] = design;

  root["filters"] = {{"design_radius", cfg.filter_radius},
                     {"sensitivity_radius", cfg.sensitivity_radius},
                     {"projection_band", cfg.projection_band}};
  root["shell"] = {{"youngs", cfg.material.youngs},
                   {"poisson", cfg.material.poisson},
                   {"thickness", cfg.thickness}};

  if (!cfg.levelset_pins.empty()) {
    ordered_json pins = ordered_json::array();
    for (const Box& b : cfg.levelset_pins) pins.push_back(box_json(b));
    root["levelset_pins"] = pins;
  }
  if (!cfg.supports.empty()) {
    ordered_json sup = ordered_json::array();
    for (const SupportSpec& s : cfg.supports)
      sup.push_back({{"box", box_json(s.box)},
                     {"type", s.clamp ? "clamp" : "pin"}});
    root["supports"] = sup;
  }
  if (!cfg.symmetry_planes.empty()) {
    ordered_json sym = ordered_json::array();
    for (const SymmetrySpec& s : cfg.symmetry_planes)
      sym.push_back({{"axis", s.axis}, {"value", s.value}});
    root["symmetry"] = sym;
  }

  ordered_json loads;
  if (cfg.has_area_load) loads["area"] = vec3_json(cfg.area_load);
  if (!cfg.edge_loads.empty()) {
    ordered_json edges = ordered_json::array();
    for (const EdgeLoadSpec& e : cfg.edge_loads)
      edges.push_back(
          {{"box", box_json(e.box)}, {"total", vec3_json(e.total_force)}});
    loads["edges"] = edges;
  }
  if (!loads.is_null()) root["loads"] = loads;

  if (cfg.has_volume_constraint)
    root["constraint"] = {{"max_volume", cfg.max_volume}};

  root["optimizer"] = {{"step_size", cfg.step_size},
                       {"embed_scale", cfg.embed_scale},
                       {"max_iters", cfg.max_iters},
                       {"normalize_embed", cfg.normalize_embed}};
  root["extraction"] = {{"snap_tol", cfg.snap_tol},
                        {"min_edge", cfg.min_edge},
                        {"min_angle", cfg.min_angle_deg}};
  root["runtime"] = {{"threads", cfg.threads},
                     {"output_dir", cfg.output_dir},
                     {"export_every", cfg.export_every},
                     {"seed", cfg.rng_seed}};
  return root.dump(2);
}

void validate_config(const RunConfig& cfg) {
  if (!(cfg.spacing > 0.0)) fail("domain.spacing must be positive");
  for (int a = 0; a < 3; ++a)
    if (!(cfg.size[a] > 0.0)) fail("domain.size components must be positive");
  if (cfg.filter_radius < cfg.spacing)
    fail("filters.design_radius must be at least the grid spacing");
  if (cfg.sensitivity_radius < cfg.spacing)
    fail("filters.sensitivity_radius must be at least the grid spacing");
  if (!(cfg.projection_band > 0.0) || cfg.projection_band > 1.0)
    fail("filters.projection_band must lie in (0, 1]");
  if (!(cfg.material.youngs > 0.0)) fail("shell.youngs must be positive");
  if (cfg.material.poisson <= -1.0 || cfg.material.poisson >= 0.5)
    fail("shell.poisson must lie in (-1, 0.5)");
  if (!(cfg.thickness > 0.0)) fail("shell.thickness must be positive");
  if (!(cfg.shape.d_norm > 0.0)) fail("design.band must be positive");
  if (cfg.shape.kind != InitShape::Kind::kPlane && !(cfg.shape.radius > 0.0))
    fail("design.radius must be positive");
  if (cfg.shape.axis < 0 || cfg.shape.axis > 2)
    fail("design.axis must be 0, 1 or 2");
  if (cfg.shape.perturb_amplitude < 0.0)
    fail("design.perturb.amplitude must be nonnegative");
  if (cfg.shape.perturb_modes < 0)
    fail("design.perturb.modes must be nonnegative");
  for (const SymmetrySpec& s : cfg.symmetry_planes)
    if (s.axis < 0 || s.axis > 2) fail("symmetry.axis must be 0, 1 or 2");
  if (cfg.has_volume_constraint && !(cfg.max_volume > 0.0))
    fail("constraint.max_volume must be positive");
  if (!(cfg.step_size > 0.0)) fail("optimizer.step_size must be positive");
  if (!(cfg.embed_scale > 0.0)) fail("optimizer.embed_scale must be positive");
  if (cfg.max_iters < 1) fail("optimizer.max_iters must be at least 1");
  if (cfg.snap_tol < 0.0 || cfg.snap_tol >= 0.5)
    fail("extraction.snap_tol must lie in [0, 0.5)");
  if (cfg.min_edge < 0.0) fail("extraction.min_edge must be nonnegative");
  if (cfg.min_angle_deg < 0.0 || cfg.min_angle_deg >= 58.0)
    fail("extraction.min_angle must lie in [0, 58)");
  if (cfg.threads < 0) fail("runtime.threads must be nonnegative");
  if (cfg.export_every < 0) fail("runtime.export_every must be nonnegative");
}

}  // namespace shellopt
