#pragma once

#include "helmopt/optimize.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace helmopt::cli {

using Json = nlohmann::json;

/// Every accepted key with its default value. Subtrees listed in
/// `free_form_keys()` are taken verbatim.
const Json& default_config();
const std::vector<std::string>& free_form_keys();

/// Overlays `user` onto `base`; unknown keys and type mismatches raise
/// ConfigError naming the dotted key path.
Json merge_config(const Json& base, const Json& user, const std::string& path = "");

/// Applies "a.b.c=value" overrides; the value is parsed as JSON and falls
/// back to a plain string.
Json apply_overrides(const Json& config, const std::vector<std::string>& overrides);

/// Reads the file (missing file: ConfigError naming the path), merges it onto
/// the defaults, then applies the overrides. An empty path means defaults only.
Json load_config(const std::string& path, const std::vector<std::string>& overrides);

/// FNV-1a 64-bit digest of the canonical dump, as 16 hex digits.
std::string digest(const Json& config);

Mesh build_mesh(const Json& config);
ProblemData build_problem(const Json& config);
BcVariant build_variant(const Json& config);
SolverOptions build_solver_options(const Json& config);
EigOptions build_eig_options(const Json& config);
OptimizeConfig build_optimize_config(const Json& config);
ShapeSpec build_shape(const Json& spec, const std::string& path);

/// Velocity descriptor: translate_x, translate_y, dilate, rotate, stretch,
/// normal_bump (center, width, amplitude; boundary bump along the node
/// normal, extended harmonically inside) or nodal (CSV file, one "vx,vy" row
/// per node).
VelocityField build_velocity(const Json& config, const Mesh& mesh);

}  // namespace helmopt::cli
