#include "commands.hpp"

#include "helmopt/mesh_io.hpp"
#include "validation.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

namespace helmopt::cli {

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve", "eigs", "shape-grad", "topo-grad", "optimize", "validate"};
  return names;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Output {
  std::filesystem::path dir;
  bool vtk = true;
  bool csv = true;

  explicit Output(const Json& config)
      : dir(config.at("output").at("dir").get<std::string>()),
        vtk(config.at("output").at("vtk").get<bool>()),
        csv(config.at("output").at("csv").get<bool>()) {
    std::filesystem::create_directories(dir);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw InvalidArgument("cannot write " + path);
    out_ << std::setprecision(17);
    row(header);
  }
  template <typename... T>
  void values(const T&... v) {
    std::ostringstream os;
    os << std::setprecision(17);
    bool first = true;
    ((os << (first ? "" : ",") << cell(v), first = false), ...);
    out_ << os.str() << "\r\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << csv_field(cells[i]);
    out_ << "\r\n";
  }

 private:
  std::ofstream out_;
  static std::string cell(const std::string& s) { return csv_field(s); }
  static std::string cell(const char* s) { return csv_field(s); }
  template <typename N>
  static std::string cell(const N& n) {
    std::ostringstream os;
    os << std::setprecision(17) << n;
    return os.str();
  }
};

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Json fd_json(const FdResult& fd) {
  Json rows = Json::array();
  for (const auto& r : fd.rows) rows.push_back({{"t", r.t}, {"j_plus", r.j_plus}, {"j_minus", r.j_minus}, {"central", r.central}});
  Json out{{"rows", rows}, {"derivative", fd.derivative}, {"richardson", fd.richardson}};
  out["observed_order"] = fd.observed_order ? Json(*fd.observed_order) : Json(nullptr);
  return out;
}

Json mesh_json(const Mesh& mesh) {
  return {{"nodes", mesh.num_nodes()}, {"triangles", mesh.num_triangles()}, {"min_angle_deg", mesh.min_angle_deg()},
          {"area", mesh.total_area()}};
}

Json j_json(const FunctionalValue& j) {
  return {{"total", j.j_total}, {"gradient_misfit", j.j_gradient_misfit}, {"value_misfit", j.j_value_misfit}};
}

std::vector<Vec2> queries(const Json& config) {
  std::vector<Vec2> out;
  for (const auto& q : config.at("topo").at("queries")) {
    if (!q.is_array() || q.size() != 2) throw ConfigError("config key 'topo.queries' expects [x, y] pairs");
    out.emplace_back(q[0].get<double>(), q[1].get<double>());
  }
  return out;
}

int cmd_solve(const Json& config, const Mesh& mesh, const Output& out, Json& results) {
  const ProblemData data = build_problem(config);
  const BcVariant variant = build_variant(config);
  const SolveReport rep = solve_state(mesh, data, variant, build_solver_options(config));
  results["J"] = j_json(evaluate_J(mesh, data, rep.solution.values));
  results["residual"] = rep.residual;
  results["resonance_margin"] = rep.resonance_margin;
  results["nearest_eigenvalue"] = rep.nearest_eigenvalue;
  if (out.vtk) export_vtk(mesh, {VtkField{"eta", to_std(rep.solution.values)}}, out.path("solve.vtk"));
  return kOk;
}

int cmd_eigs(const Json& config, const Mesh& mesh, const Output& out, Json& results) {
  const BcVariant variant = build_variant(config);
  const int count = config.at("eigs").at("count").get<int>();
  const auto pairs = solve_eigs(mesh, variant, count, build_eig_options(config));
  const auto clusters = detect_multiplicity(mesh, pairs, config.at("eigs").at("cluster_tol").get<double>());
  Json eig = Json::array();
  for (const auto& p : pairs) eig.push_back({{"index", p.index}, {"lambda", p.lambda}, {"residual", p.residual}});
  Json cl = Json::array();
  for (const auto& c : clusters) {
    Json idx = Json::array();
    for (const auto& p : c.pairs) idx.push_back(p.index);
    cl.push_back({{"indices", idx}, {"multiplicity", c.multiplicity}, {"lambda_mean", c.lambda_mean}});
  }
  results["eigenpairs"] = eig;
  results["clusters"] = cl;
  if (out.csv) {
    CsvWriter csv(out.path("eigenvalues.csv"), {"index", "lambda", "residual"});
    for (const auto& p : pairs) csv.values(p.index, p.lambda, p.residual);
  }
  if (out.vtk) {
    std::vector<VtkField> fields;
    for (const auto& p : pairs) fields.push_back({"eta_" + std::to_string(p.index), to_std(p.eigenfunction.values)});
    export_vtk(mesh, fields, out.path("eigs.vtk"));
  }
  return kOk;
}

int cmd_shape_grad(const Json& config, const Mesh& mesh, const Output& out, Json& results) {
  const ProblemData data = build_problem(config);
  const BcVariant variant = build_variant(config);
  const SolverOptions opts = build_solver_options(config);
  const VelocityField velocity = build_velocity(config, mesh);
  const Json& sg = config.at("shape_grad");
  const std::string target = sg.at("target").get<std::string>();
  const auto steps = sg.at("fd_steps").get<std::vector<double>>();
  results["velocity"] = velocity.name();

  if (target == "eigenvalue") {
    const int k = sg.at("eigen_index").get<int>();
    const auto pairs = solve_eigs(mesh, variant, k + 3, build_eig_options(config));
    const auto clusters = detect_multiplicity(mesh, pairs, config.at("eigs").at("cluster_tol").get<double>());
    for (const auto& c : clusters) {
      const bool mine = std::any_of(c.pairs.begin(), c.pairs.end(), [k](const EigenPair& p) { return p.index == k; });
      if (!mine) continue;
      results["lambda"] = c.lambda_mean;
      results["multiplicity"] = c.multiplicity;
      if (c.multiplicity == 1) {
        results["dlambda"] = simple_eig_derivative(mesh, c.pairs.front(), velocity, variant, &c);
      } else {
        const auto form = sg.at("natural_form").get<std::string>() == "as_stated" ? NaturalMatrixForm::AsStated
                                                                                   : NaturalMatrixForm::Weighted;
        const auto m = multiple_eig_derivative(mesh, c, velocity, variant, form);
        results["candidates"] = to_std(m.candidates);
        results["natural_form"] = sg.at("natural_form");
        const int first = c.pairs.front().index;
        if (!steps.empty()) {
          results["fd_branches"] = oracle::fd_branch_derivatives(mesh, variant, first, c.multiplicity, velocity, steps.front());
        }
      }
      if (c.multiplicity == 1 && !steps.empty()) {
        const auto fd = oracle::fd_branch_derivatives(mesh, variant, k, 1, velocity, steps.front());
        results["fd"] = fd.front();
        results["rel_error"] = std::abs(results["dlambda"].get<double>() - fd.front()) / std::abs(fd.front());
      }
      break;
    }
    return kOk;
  }

  ShapeGradientResult r;
  FdResult fd;
  const bool want_fd = !steps.empty();
  if (target == "eigen_functional") {
    const int k = sg.at("eigen_index").get<int>();
    const auto pairs = solve_eigs(mesh, variant, k + 1, build_eig_options(config));
    r = dj_with_eigenvalue(mesh, pairs[static_cast<std::size_t>(k)], data, velocity, variant);
    if (want_fd) fd = fd_eigen_functional(mesh, pairs[static_cast<std::size_t>(k)], data, velocity, steps, variant);
    results["lambda"] = pairs[static_cast<std::size_t>(k)].lambda;
  } else if (target == "functional") {
    switch (variant) {
      case BcVariant::Dirichlet: r = dj_dirichlet(mesh, data, velocity, opts); break;
      case BcVariant::Neumann: r = dj_neumann(mesh, data, velocity, opts); break;
      case BcVariant::Obstacle: {
        const bool eig = sg.at("obstacle_mode").get<std::string>() == "simple_eig";
        if (eig) {
          const auto pair = solve_eigs(mesh, variant, 1, build_eig_options(config)).front();
          r = dj_obstacle(mesh, data, velocity, ObstacleMode::SimpleEig, &pair, opts);
          if (want_fd) fd = fd_eigen_functional(mesh, pair, data, velocity, steps, variant);
        } else {
          r = dj_obstacle(mesh, data, velocity, ObstacleMode::Plain, nullptr, opts);
        }
        break;
      }
      default: throw ConfigError("shape-grad supports bc dirichlet, neumann and obstacle");
    }
    if (want_fd && fd.rows.empty()) fd = fd_shape_derivative(mesh, data, velocity, steps, variant, opts);
  } else {
    throw ConfigError("config key 'shape_grad.target' must be functional, eigenvalue or eigen_functional");
  }
  results["dj"] = r.dj;
  Json terms = Json::object();
  for (const auto& [name, value] : r.terms) terms[name] = value;
  results["terms"] = terms;
  results["warnings"] = r.warnings;
  results["adjoint_convention"] = to_string(r.convention);
  if (want_fd) {
    results["fd"] = fd_json(fd);
    results["rel_error"] = std::abs(r.dj - fd.derivative) / std::abs(fd.derivative);
  }
  if (out.vtk && r.density) export_vtk(mesh, {VtkField{"density", to_std(*r.density)}}, out.path("shape_grad.vtk"));
  return kOk;
}

int cmd_topo_grad(const Json& config, const Mesh& mesh, const Output& out, Json& results) {
  const ProblemData data = build_problem(config);
  const BcVariant variant = build_variant(config);
  const SolverOptions opts = build_solver_options(config);
  const Json& tp = config.at("topo");
  const std::string mode = tp.at("mode").get<std::string>();
  const auto points = queries(config);
  const auto eps = tp.at("eps").get<std::vector<double>>();
  HoleSpec reference;
  reference.cap_omega = tp.at("cap_omega").get<double>();
  reference.mes_omega = tp.at("mes_omega").get<double>();

  auto quotient_json = [](const QuotientTable& q) {
    Json rows = Json::array();
    for (const auto& r : q.rows) {
      rows.push_back({{"eps", r.eps}, {"j_eps", r.j_eps}, {"delta_j", r.delta_j}, {"scale", r.scale},
                      {"quotient", r.quotient}});
    }
    Json j{{"j_base", q.j_base}, {"rows", rows}, {"limit", q.limit},
           {"fit_eps2", {{"slope", q.fit_eps2.slope}, {"r_squared", q.fit_eps2.r_squared}}}};
    j["observed_order"] = q.observed_order ? Json(*q.observed_order) : Json(nullptr);
    return j;
  };
  std::unique_ptr<CsvWriter> csv;
  if (out.csv && !eps.empty()) {
    csv = std::make_unique<CsvWriter>(out.path("quotients.csv"),
                                      std::vector<std::string>{"x", "y", "eps", "delta_j", "scale", "quotient"});
  }

  Json pts = Json::array();
  if (mode == "source") {
    const TopoField field = topo_source_field(mesh, data, variant, opts);
    results["scale"] = field.scale.name;
    results["adjoint_convention"] = to_string(field.convention);
    for (const Vec2& x : points) {
      Json p{{"x", {x.x(), x.y()}}, {"dt", evaluate_at(mesh, field.values.values, x)}};
      if (!eps.empty()) {
        const auto q = topo_quotient(mesh, data, x, eps, TopoMode::Source, reference, variant, opts);
        p["quotients"] = quotient_json(q);
        if (csv) {
          for (const auto& r : q.rows) csv->values(x.x(), x.y(), r.eps, r.delta_j, r.scale, r.quotient);
        }
      }
      pts.push_back(p);
    }
    if (out.vtk) export_vtk(mesh, {VtkField{"topo_source", to_std(field.values.values)}}, out.path("topo.vtk"));
  } else if (mode == "hole") {
    if (variant != BcVariant::Dirichlet) throw ConfigError("topo mode hole needs bc dirichlet");
    const auto pairs = solve_eigs(mesh, BcVariant::Dirichlet, 2, build_eig_options(config));
    const auto clusters = detect_multiplicity(mesh, pairs, config.at("eigs").at("cluster_tol").get<double>());
    const EigenPair& pair = pairs.front();
    results["lambda"] = pair.lambda;
    results["adjoint_convention"] = "hole";
    results["scale"] = "eps^2";
    const auto values = topo_hole_derivative(mesh, pair, data, points, reference, &clusters.front());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Vec2& x = points[i];
      Json p{{"x", {x.x(), x.y()}}, {"dt", values[i].dt}, {"eta", values[i].eta}, {"p", values[i].p}};
      if (!eps.empty()) {
        const auto q = topo_quotient(mesh, data, x, eps, TopoMode::HoleDirichlet, reference);
        p["quotients"] = quotient_json(q);
        if (csv) {
          for (const auto& r : q.rows) csv->values(x.x(), x.y(), r.eps, r.delta_j, r.scale, r.quotient);
        }
        const auto ex = eig_hole_expansion(mesh, pair, x, reference, eps);
        Json rows = Json::array();
        for (const auto& r : ex.rows) {
          rows.push_back({{"eps", r.eps}, {"lambda_eps", r.lambda_eps}, {"delta", r.delta}, {"predicted", r.predicted}});
        }
        p["eigenvalue_sweep"] = {{"rows", rows},
                                 {"first_order_coeff", ex.first_order_coeff},
                                 {"fit_eps_r2", ex.fit_eps ? Json(ex.fit_eps->r_squared) : Json(nullptr)},
                                 {"fit_inv_log_r2", ex.fit_inv_log ? Json(ex.fit_inv_log->r_squared) : Json(nullptr)}};
      }
      pts.push_back(p);
    }
    if (out.vtk) {
      const Vector p = hole_adjoint(mesh, pair, data);
      export_vtk(mesh, {VtkField{"eta", to_std(pair.eigenfunction.values)}, VtkField{"p", to_std(p)}},
                 out.path("topo.vtk"));
    }
  } else {
    throw ConfigError("config key 'topo.mode' must be source or hole");
  }
  results["queries"] = pts;
  return kOk;
}

int cmd_optimize(const Json& config, const Mesh& mesh, const Output& out, Json& results) {
  const ProblemData data = build_problem(config);
  OptimizeConfig cfg = build_optimize_config(config);
  cfg.output_dir = out.dir.string();
  const OptimizeResult r = run(mesh, data, cfg);
  results["iterations"] = r.history.back().iter;
  results["records"] = r.history.size();
  results["j_initial"] = r.history.front().j;
  results["j_final"] = r.history.back().j;
  results["j_ratio"] = r.history.back().j / r.history.front().j;
  results["stop_reason"] = r.stop_reason;
  results["monotone"] = history_monotone(r.history, cfg.armijo_c);
  results["final_mesh"] = mesh_json(r.mesh);
  int holes = 0;
  for (const auto& rec : r.history) holes += rec.holes_nucleated;
  results["holes_nucleated"] = holes;
  results["adjoint_convention"] = to_string(AdjointConvention::Section3);
  return kOk;
}

int cmd_validate(const Json& config, const Output& out, Json& results) {
  const auto rows = run_validation(config);
  Json table = Json::array();
  bool ok = true;
  std::cerr << std::left << std::setw(28) << "formula" << std::setw(16) << "value" << std::setw(16) << "reference"
            << std::setw(12) << "rel_err" << std::setw(10) << "tol" << "status\n";
  for (const auto& r : rows) {
    std::ostringstream tol;
    tol << std::setprecision(3) << r.tolerance;
    table.push_back(to_json(r));
    ok = ok && r.pass;
    std::cerr << std::left << std::setw(28) << r.name << std::setw(16) << r.value << std::setw(16) << r.reference
              << std::setw(12) << r.rel_error << std::setw(10) << (r.asserted ? tol.str() : "-")
              << (r.asserted ? (r.pass ? "ok" : "FAIL") : "reported") << "\n";
  }
  results["table"] = table;
  results["all_pass"] = ok;
  results["adjoint_convention"] = {{"shape", to_string(AdjointConvention::Section3)},
                                   {"topological", to_string(AdjointConvention::Section4)}};
  if (out.csv) {
    CsvWriter csv(out.path("validation.csv"),
                  {"name", "formula", "reference_kind", "value", "reference", "rel_error", "tolerance", "asserted", "pass"});
    for (const auto& r : rows) {
      csv.values(r.name, r.formula, r.reference_kind, r.value, r.reference, r.rel_error, r.tolerance,
                 r.asserted ? 1 : 0, r.pass ? 1 : 0);
    }
  }
  return ok ? kOk : kValidationFailure;
}

}  // namespace

int run_command(const std::string& command, const Json& config, Json& summary) {
  const auto start = Clock::now();
  summary["command"] = command;
  summary["digest"] = digest(config);
  summary["config"] = config;
  summary["deterministic"] = config.at("deterministic");
  summary["tolerances"] = {{"solver", config.at("solver")},
                           {"eigs", {{"tol", config.at("eigs").at("tol")}, {"cluster_tol", config.at("eigs").at("cluster_tol")}}}};
  const Output out(config);
  Json results = Json::object();
  Json timings = Json::object();
  int code = kOk;
  if (command == "validate") {
    summary["tolerances"]["validate"] = config.at("validate").at("tolerances");
    code = cmd_validate(config, out, results);
  } else {
    const auto t0 = Clock::now();
    const Mesh mesh = build_mesh(config);
    timings["mesh_s"] = seconds_since(t0);
    results["mesh"] = mesh_json(mesh);
    const auto t1 = Clock::now();
    if (command == "solve") code = cmd_solve(config, mesh, out, results);
    else if (command == "eigs") code = cmd_eigs(config, mesh, out, results);
    else if (command == "shape-grad") code = cmd_shape_grad(config, mesh, out, results);
    else if (command == "topo-grad") code = cmd_topo_grad(config, mesh, out, results);
    else if (command == "optimize") code = cmd_optimize(config, mesh, out, results);
    else throw ConfigError("unknown command '" + command + "'");
    timings["compute_s"] = seconds_since(t1);
  }
  if (!summary.contains("convention")) {
    summary["convention"] = results.contains("adjoint_convention") ? results["adjoint_convention"] : Json(nullptr);
  }
  timings["total_s"] = seconds_since(start);
  summary["results"] = results;
  summary["timings"] = timings;
  summary["exit_code"] = code;
  std::ofstream(out.path("summary.json")) << std::setw(2) << summary << "\n";
  return code;
}

}  // namespace helmopt::cli
