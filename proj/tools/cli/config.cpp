#include "config.hpp"

#include "expression.hpp"
#include "helmopt/mesh_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace helmopt::cli {

const Json& default_config() {
  static const Json d = Json::parse(R"({
    "command": "",
    "mesh": {
      "type": "disk", "center": [0.0, 0.0], "radius": 1.0, "width": 1.0, "height": 1.0, "h": 0.05,
      "outer": null, "obstacle": null, "path": "", "tag_map": {}, "default_tag": "outer"
    },
    "problem": {"k2": 1.0, "f": "1", "A": ["0", "0"], "eta0": "0", "gamma": 1.0},
    "bc": "dirichlet",
    "velocity": {"type": "dilate", "center": [0.0, 0.0], "width": 0.25, "amplitude": 1.0, "path": ""},
    "solver": {"resonance_threshold": 1e-6, "residual_tol": 1e-8, "inverse_iterations": 12},
    "eigs": {"count": 6, "cluster_tol": 0.01, "tol": 1e-10, "max_iters": 400},
    "shape_grad": {
      "target": "functional", "eigen_index": 0, "fd_steps": [], "natural_form": "weighted",
      "obstacle_mode": "plain"
    },
    "topo": {"mode": "source", "queries": [], "eps": [], "cap_omega": 1.0, "mes_omega": 3.141592653589793},
    "optimize": {
      "max_iters": 30, "step0": 0.05, "armijo_c": 1e-4, "shrink": 0.5, "min_step": 1e-6,
      "movable_tags": ["obstacle"], "stop_tol": 0.0, "min_angle_deg": 15.0,
      "extension_stiffening": 1.0, "relax_interior": true,
      "area": {"enabled": false, "target": 0.0, "rate": 1.0},
      "topo": {"enabled": false, "every": 5, "quantile": 0.05, "eps0": 0.0}
    },
    "validate": {
      "h": 0.05, "eig_h": 0.025, "square_h": 0.0625, "fd_steps": [0.01, 0.005, 0.0025],
      "tolerances": {
        "dirichlet": 0.05, "neumann": 0.10, "obstacle": 0.10, "eig_dilation": 0.05,
        "eig_translation": 0.01, "multi_eig": 0.05, "multi_eig_rebasis": 1e-10, "source_identity": 1e-10
      }
    },
    "output": {"dir": "out", "vtk": true, "csv": true},
    "deterministic": true
  })");
  return d;
}

const std::vector<std::string>& free_form_keys() {
  static const std::vector<std::string> keys{"mesh.outer", "mesh.obstacle", "mesh.tag_map"};
  return keys;
}

namespace {

bool compatible(const Json& def, const Json& val) {
  if (def.is_null() || val.is_null()) return true;
  if (def.is_number()) return val.is_number();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_string()) return val.is_string() || val.is_number();  // expressions may be plain numbers
  if (def.is_array()) return val.is_array();
  if (def.is_object()) return val.is_object();
  return true;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

}  // namespace

Json merge_config(const Json& base, const Json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config" + (path.empty() ? "" : " key " + path) + " must be an object");
  Json out = base;
  const auto& free = free_form_keys();
  for (const auto& [key, value] : user.items()) {
    const std::string p = join(path, key);
    if (!base.contains(key)) throw ConfigError("unknown config key '" + p + "'");
    const Json& def = base.at(key);
    if (std::find(free.begin(), free.end(), p) != free.end()) {
      out[key] = value;
    } else if (def.is_object()) {
      out[key] = merge_config(def, value, p);
    } else if (!compatible(def, value)) {
      throw ConfigError("config key '" + p + "' expects " + std::string(def.type_name()) + ", got " +
                        value.type_name());
    } else {
      out[key] = value;
    }
  }
  return out;
}

Json apply_overrides(const Json& config, const std::vector<std::string>& overrides) {
  Json out = config;
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + item + "' is not of the form key=value");
    const std::string key = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    Json nested = value;
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) nested = Json{{*it, nested}};
    out = merge_config(out, nested);
  }
  return out;
}

Json load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Json config = default_config();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    Json user;
    try {
      user = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    config = merge_config(config, user);
  }
  return apply_overrides(config, overrides);
}

std::string digest(const Json& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

Vec2 vec2(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError("config key '" + path + "' expects a pair of numbers");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

ScalarData scalar(const Json& j, const std::string& path) {
  if (j.is_number()) return ScalarData::constant(j.get<double>());
  if (!j.is_string()) throw ConfigError("config key '" + path + "' expects a number or an expression string");
  const Expression e = Expression::parse(j.get<std::string>());
  if (e.is_constant()) return ScalarData::constant(e(Vec2::Zero()));
  return ScalarData::analytic([e](const Vec2& p) { return e(p); });
}

}  // namespace

ShapeSpec build_shape(const Json& spec, const std::string& path) {
  if (!spec.is_object() || !spec.contains("type")) throw ConfigError("config key '" + path + "' needs a shape type");
  const std::string type = spec.at("type").get<std::string>();
  for (const auto& [key, value] : spec.items()) {
    static const std::vector<std::string> allowed{"type", "center", "radius", "lo", "hi", "vertices"};
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown config key '" + path + "." + key + "'");
    }
  }
  if (type == "disk") {
    return ShapeSpec::disk(vec2(spec.value("center", Json::array({0.0, 0.0})), path + ".center"),
                           spec.value("radius", 1.0));
  }
  if (type == "rectangle") return ShapeSpec::rectangle(vec2(spec.at("lo"), path + ".lo"), vec2(spec.at("hi"), path + ".hi"));
  if (type == "polygon") {
    std::vector<Vec2> v;
    for (const auto& p : spec.at("vertices")) v.push_back(vec2(p, path + ".vertices"));
    return ShapeSpec::polygon(std::move(v));
  }
  throw ConfigError("config key '" + path + ".type' must be disk, rectangle or polygon");
}

Mesh build_mesh(const Json& config) {
  const Json& m = config.at("mesh");
  const std::string type = m.at("type").get<std::string>();
  const double h = m.at("h").get<double>();
  if (type == "disk") return generate_disk(vec2(m.at("center"), "mesh.center"), m.at("radius").get<double>(), h);
  if (type == "rectangle") return generate_rectangle(m.at("width").get<double>(), m.at("height").get<double>(), h);
  if (type == "annulus") {
    if (m.at("outer").is_null() || m.at("obstacle").is_null()) {
      throw ConfigError("mesh type annulus needs mesh.outer and mesh.obstacle");
    }
    return generate_annulus(build_shape(m.at("outer"), "mesh.outer"), build_shape(m.at("obstacle"), "mesh.obstacle"), h);
  }
  if (type == "msh") {
    MshTagMap tags;
    for (const auto& [key, value] : m.at("tag_map").items()) {
      tags.physical[std::stoi(key)] = boundary_tag_from_string(value.get<std::string>());
    }
    const std::string def = m.at("default_tag").get<std::string>();
    if (def.empty()) tags.default_tag.reset();
    else tags.default_tag = boundary_tag_from_string(def);
    return import_msh(m.at("path").get<std::string>(), tags);
  }
  if (type == "vtk") return import_vtk(m.at("path").get<std::string>());
  throw ConfigError("config key 'mesh.type' must be disk, rectangle, annulus, msh or vtk");
}

ProblemData build_problem(const Json& config) {
  const Json& p = config.at("problem");
  ProblemData d;
  d.k2 = p.at("k2").get<double>();
  d.gamma = p.at("gamma").get<double>();
  d.f = scalar(p.at("f"), "problem.f");
  d.eta0 = scalar(p.at("eta0"), "problem.eta0");
  const Json& a = p.at("A");
  if (!a.is_array() || a.size() != 2) throw ConfigError("config key 'problem.A' expects two components");
  const Expression ax = Expression::parse(a[0].is_number() ? a[0].dump() : a[0].get<std::string>());
  const Expression ay = Expression::parse(a[1].is_number() ? a[1].dump() : a[1].get<std::string>());
  if (ax.is_constant() && ay.is_constant()) {
    d.A = VectorData::constant(Vec2(ax(Vec2::Zero()), ay(Vec2::Zero())));
  } else {
    d.A = VectorData::analytic([ax, ay](const Vec2& x) { return Vec2(ax(x), ay(x)); });
  }
  d.validate();
  return d;
}

BcVariant build_variant(const Json& config) { return bc_variant_from_string(config.at("bc").get<std::string>()); }

SolverOptions build_solver_options(const Json& config) {
  const Json& s = config.at("solver");
  SolverOptions o;
  o.resonance_threshold = s.at("resonance_threshold").get<double>();
  o.residual_tol = s.at("residual_tol").get<double>();
  o.inverse_iterations = s.at("inverse_iterations").get<int>();
  return o;
}

EigOptions build_eig_options(const Json& config) {
  const Json& e = config.at("eigs");
  EigOptions o;
  o.tol = e.at("tol").get<double>();
  o.max_iters = e.at("max_iters").get<int>();
  return o;
}

OptimizeConfig build_optimize_config(const Json& config) {
  const Json& o = config.at("optimize");
  OptimizeConfig c;
  c.max_iters = o.at("max_iters").get<int>();
  c.step0 = o.at("step0").get<double>();
  c.armijo_c = o.at("armijo_c").get<double>();
  c.shrink = o.at("shrink").get<double>();
  c.min_step = o.at("min_step").get<double>();
  c.movable_tags.clear();
  for (const auto& t : o.at("movable_tags")) c.movable_tags.push_back(boundary_tag_from_string(t.get<std::string>()));
  c.stop_tol = o.at("stop_tol").get<double>();
  c.min_angle_deg = o.at("min_angle_deg").get<double>();
  c.extension_stiffening = o.at("extension_stiffening").get<double>();
  c.relax_interior = o.at("relax_interior").get<bool>();
  c.area.enabled = o.at("area").at("enabled").get<bool>();
  c.area.target = o.at("area").at("target").get<double>();
  c.area.rate = o.at("area").at("rate").get<double>();
  c.topo.enabled = o.at("topo").at("enabled").get<bool>();
  c.topo.every = o.at("topo").at("every").get<int>();
  c.topo.quantile = o.at("topo").at("quantile").get<double>();
  c.topo.eps0 = o.at("topo").at("eps0").get<double>();
  c.variant = build_variant(config);
  c.solver = build_solver_options(config);
  c.validate();
  return c;
}

namespace {

std::vector<Vec2> read_nodal_csv(const std::string& path, Index expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open velocity file '" + path + "'");
  std::vector<Vec2> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double vx = 0.0, vy = 0.0;
    if (!(ls >> vx >> vy)) {
      if (out.empty()) continue;  // header row
      throw ParseError("velocity file '" + path + "': bad row '" + line + "'");
    }
    out.emplace_back(vx, vy);
  }
  if (static_cast<Index>(out.size()) != expected) {
    throw ConfigError("velocity file '" + path + "' has " + std::to_string(out.size()) + " rows, mesh has " +
                      std::to_string(expected) + " nodes");
  }
  return out;
}

}  // namespace

VelocityField build_velocity(const Json& config, const Mesh& mesh) {
  const Json& v = config.at("velocity");
  const std::string type = v.at("type").get<std::string>();
  const Vec2 c = vec2(v.at("center"), "velocity.center");
  if (type == "translate_x") return VelocityField::translation({1.0, 0.0});
  if (type == "translate_y") return VelocityField::translation({0.0, 1.0});
  if (type == "dilate") return VelocityField::dilation(c);
  if (type == "rotate") return VelocityField::rotation(c);
  if (type == "stretch") return VelocityField::stretch(c);
  if (type == "normal_bump") {
    const double width = v.at("width").get<double>();
    const double amp = v.at("amplitude").get<double>();
    if (!(width > 0.0)) throw ConfigError("config key 'velocity.width' must be positive");
    std::vector<Vec2> values(static_cast<std::size_t>(mesh.num_nodes()), Vec2::Zero());
    std::vector<char> fixed(values.size(), 0);
    for (BoundaryTag tag : mesh.tags()) {
      for (const auto& loop : boundary_geometry(mesh, tag).loops) {
        for (std::size_t i = 0; i < loop.loop.nodes.size(); ++i) {
          const Index n = loop.loop.nodes[i];
          const double r = (mesh.node(n) - c).norm() / width;
          const double w = r < 1.0 ? std::pow(std::cos(0.5 * kPi * r), 2) : 0.0;
          values[static_cast<std::size_t>(n)] = amp * w * loop.node_normal[i];
        }
      }
    }
    for (Index i = 0; i < mesh.num_nodes(); ++i) fixed[i] = mesh.is_boundary_node(i);
    return VelocityField::nodal(harmonic_extension(mesh, values, fixed), "normal_bump");
  }
  if (type == "nodal") {
    return VelocityField::nodal(read_nodal_csv(v.at("path").get<std::string>(), mesh.num_nodes()), "nodal");
  }
  throw ConfigError(
      "config key 'velocity.type' must be translate_x, translate_y, dilate, rotate, stretch, normal_bump or nodal");
}

}  // namespace helmopt::cli
