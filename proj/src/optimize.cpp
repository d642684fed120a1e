#include "helmopt/optimize.hpp"

#include "helmopt/mesh_io.hpp"
#include "mesh_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace helmopt {

void OptimizeConfig::validate() const {
  if (max_iters < 0) throw InvalidArgument("max_iters must be non-negative");
  if (!(step0 > 0.0)) throw InvalidArgument("step0 must be positive");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw InvalidArgument("armijo_c must lie in (0,1)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw InvalidArgument("shrink must lie in (0,1)");
  if (!(min_step > 0.0)) throw InvalidArgument("min_step must be positive");
  if (topo.enabled) {
    if (!(topo.quantile > 0.0 && topo.quantile < 1.0)) throw InvalidArgument("topo quantile must lie in (0,1)");
    if (topo.every < 1) throw InvalidArgument("topo.every must be at least 1");
  }
  if (movable_tags.empty()) throw InvalidArgument("no movable boundary tags");
  if (!(stop_tol >= 0.0)) throw InvalidArgument("stop_tol must be non-negative");
}

namespace {

struct Evaluation {
  FunctionalValue j;
  Vector state;
};

Evaluation evaluate(const Mesh& mesh, const ProblemData& data, const OptimizeConfig& cfg) {
  Evaluation e;
  e.state = solve_state(mesh, data, cfg.variant, cfg.solver).solution.values;
  e.j = evaluate_J(mesh, data, e.state);
  return e;
}

// movable boundary nodes with their outward normals and trapezoidal weights
struct MovableBoundary {
  std::vector<Index> nodes;
  std::vector<Vec2> normal;
  std::vector<double> weight;
};

MovableBoundary movable_boundary(const Mesh& mesh, const std::vector<BoundaryTag>& tags) {
  MovableBoundary out;
  for (BoundaryTag tag : tags) {
    if (!mesh.has_tag(tag)) throw LookupError("movable tag " + to_string(tag) + " is absent from the mesh");
    for (const auto& loop : boundary_geometry(mesh, tag).loops) {
      for (std::size_t i = 0; i < loop.loop.nodes.size(); ++i) {
        out.nodes.push_back(loop.loop.nodes[i]);
        out.normal.push_back(loop.node_normal[i]);
        out.weight.push_back(loop.node_weight[i]);
      }
    }
  }
  return out;
}

// interior Delaunay flips and Laplacian relaxation; boundary nodes stay put
Mesh relax_interior(const Mesh& mesh) {
  std::vector<Vec2> nodes = mesh.nodes();
  std::vector<Triangle> tris = mesh.triangles();
  std::vector<Index> interior;
  std::vector<char> locked(nodes.size(), 0);
  for (Index i = 0; i < mesh.num_nodes(); ++i) {
    if (mesh.is_boundary_node(i)) {
      locked[i] = 1;
    } else {
      interior.push_back(i);
    }
  }
  detail::improve_triangulation(nodes, tris, interior, locked, 3);
  return Mesh(std::move(nodes), std::move(tris), mesh.boundary_edges());
}

IterationRecord base_record(const Mesh& mesh, const FunctionalValue& j) {
  IterationRecord r;
  r.j = j.j_total;
  r.j_gradient_misfit = j.j_gradient_misfit;
  r.j_value_misfit = j.j_value_misfit;
  r.area = mesh.total_area();
  r.min_angle = mesh.min_angle_deg();
  return r;
}

}  // namespace

Vector descent_density(const Mesh& mesh, const ProblemData& data, const OptimizeConfig& cfg) {
  const VelocityField zero = VelocityField::zero();
  switch (cfg.variant) {
    case BcVariant::Dirichlet:
      return *dj_dirichlet(mesh, data, zero, cfg.solver).density;
    case BcVariant::Obstacle:
      return *dj_obstacle(mesh, data, zero, ObstacleMode::Plain, nullptr, cfg.solver).density;
    case BcVariant::Neumann: {
      const MovableBoundary mb = movable_boundary(mesh, cfg.movable_tags);
      Vector g = Vector::Zero(mesh.num_nodes());
      for (std::size_t k = 0; k < mb.nodes.size(); ++k) {
        std::vector<Vec2> bump(static_cast<std::size_t>(mesh.num_nodes()), Vec2::Zero());
        bump[static_cast<std::size_t>(mb.nodes[k])] = mb.normal[k];
        const double dj = dj_neumann(mesh, data, VelocityField::nodal(std::move(bump), "bump"), cfg.solver).dj;
        g[mb.nodes[k]] = dj / mb.weight[k];
      }
      return g;
    }
    default:
      throw PreconditionError("optimization needs the Dirichlet, Neumann or obstacle configuration");
  }
}

DescentDirection descent_direction(const Mesh& mesh, const Vector& g, const OptimizeConfig& cfg) {
  const MovableBoundary mb = movable_boundary(mesh, cfg.movable_tags);
  DescentDirection out;
  out.normal_speed = Vector::Zero(mesh.num_nodes());
  double gmax = 0.0;
  if (cfg.area.enabled) {
    double length = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < mb.nodes.size(); ++k) {
      length += mb.weight[k];
      mean += mb.weight[k] * g[mb.nodes[k]];
    }
    mean /= length;
    const double target = cfg.area.target > 0.0 ? cfg.area.target : mesh.total_area();
    out.mu = mean + cfg.area.rate * (target - mesh.total_area()) / length;
  }
  for (std::size_t k = 0; k < mb.nodes.size(); ++k) {
    const double vn = -(g[mb.nodes[k]] - out.mu);
    out.normal_speed[mb.nodes[k]] = vn;
    out.max_speed = std::max(out.max_speed, std::abs(vn));
    gmax = std::max(gmax, std::abs(g[mb.nodes[k]]));
  }
  // a uniform density minus its own mean leaves only round-off
  if (out.max_speed <= 1e-12 * gmax) {
    out.normal_speed.setZero();
    out.max_speed = 0.0;
  }
  return out;
}

StepResult descent_step(const Mesh& mesh, const ProblemData& data, const OptimizeConfig& cfg, double step,
                        std::optional<double> j_old) {
  cfg.validate();
  if (mesh.min_angle_deg() < cfg.min_angle_deg) throw QualityError("mesh quality is already below the floor");
  const Evaluation start = evaluate(mesh, data, cfg);
  const double j0 = j_old.value_or(start.j.j_total);
  const Vector g = descent_density(mesh, data, cfg);
  const MovableBoundary mb = movable_boundary(mesh, cfg.movable_tags);

  const DescentDirection dir = descent_direction(mesh, g, cfg);
  const double mu = dir.mu;
  const double vmax = dir.max_speed;

  std::vector<Vec2> v(static_cast<std::size_t>(mesh.num_nodes()), Vec2::Zero());
  std::vector<char> fixed(static_cast<std::size_t>(mesh.num_nodes()), 0);
  for (Index i = 0; i < mesh.num_nodes(); ++i) fixed[i] = mesh.is_boundary_node(i);
  for (std::size_t k = 0; k < mb.nodes.size(); ++k) {
    v[static_cast<std::size_t>(mb.nodes[k])] = dir.normal_speed[mb.nodes[k]] * mb.normal[k];
  }

  StepResult out{mesh, base_record(mesh, start.j), start.state};
  out.record.kind = "descent";
  out.record.mu = mu;
  out.record.j = j0;
  if (vmax == 0.0) {
    out.record.accepted = true;
    return out;
  }
  double dj = 0.0;
  for (std::size_t k = 0; k < mb.nodes.size(); ++k) {
    dj += mb.weight[k] * g[mb.nodes[k]] * v[static_cast<std::size_t>(mb.nodes[k])].dot(mb.normal[k]) / vmax;
  }
  for (auto& x : v) x /= vmax;
  const auto field = harmonic_extension(mesh, v, fixed, cfg.extension_stiffening);
  out.record.dj = std::abs(dj);

  int backtracks = 0;
  for (double t = step; t >= cfg.min_step; t *= cfg.shrink, ++backtracks) {
    std::optional<Mesh> trial;
    try {
      trial = deform(mesh, field, t);
      if (cfg.relax_interior) trial = relax_interior(*trial);
    } catch (const Error&) {
      continue;
    }
    if (trial->min_angle_deg() < cfg.min_angle_deg) continue;
    Evaluation e;
    try {
      e = evaluate(*trial, data, cfg);
    } catch (const ResonanceError&) {
      continue;
    }
    if (e.j.j_total <= j0 - cfg.armijo_c * t * out.record.dj) {
      out.mesh = std::move(*trial);
      out.state = std::move(e.state);
      out.record = base_record(out.mesh, e.j);
      out.record.kind = "descent";
      out.record.mu = mu;
      out.record.dj = std::abs(dj);
      out.record.step = t;
      out.record.accepted = true;
      out.record.backtracks = backtracks;
      return out;
    }
  }
  std::ostringstream os;
  os << "no admissible step above " << cfg.min_step << " (|DJ| = " << std::abs(dj) << ")";
  throw StallError(os.str());
}

namespace {

double boundary_distance(const Mesh& mesh, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : mesh.boundary_edges()) {
    const Vec2 a = mesh.node(e.nodes[0]);
    const Vec2 d = mesh.node(e.nodes[1]) - a;
    const double s = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    best = std::min(best, (p - (a + s * d)).norm());
  }
  return best;
}

}  // namespace

StepResult topology_step(const Mesh& mesh, const ProblemData& data, const OptimizeConfig& cfg,
                         const TopoField* field) {
  const Evaluation start = evaluate(mesh, data, cfg);
  StepResult out{mesh, base_record(mesh, start.j), start.state};
  out.record.kind = "topology";
  out.record.accepted = true;

  const TopoField computed = field ? TopoField{} : topo_source_field(mesh, data, cfg.variant, cfg.solver);
  const TopoField& dt = field ? *field : computed;
  const Vector& values = dt.values.values;
  if (values.size() != mesh.num_nodes()) throw InvalidArgument("topological derivative field has the wrong size");

  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  const auto qi = static_cast<std::size_t>(std::floor(cfg.topo.quantile * static_cast<double>(sorted.size() - 1)));
  const double threshold = std::min(sorted[qi], 0.0);

  Index best = -1;
  double best_radius = 0.0;
  for (Index i = 0; i < mesh.num_nodes(); ++i) {
    if (mesh.is_boundary_node(i) || !(values[i] < 0.0) || values[i] > threshold) continue;
    if (best >= 0 && values[i] >= values[best]) continue;
    const Vec2& x = mesh.node(i);
    const double h = local_mesh_size(mesh, x);
    const double r = std::max(4.0 * h, cfg.topo.eps0);
    if (boundary_distance(mesh, x) < r + 2.0 * h) continue;
    best = i;
    best_radius = r;
  }
  if (best < 0) return out;

  const HoleSpec hole{mesh.node(best), best_radius};
  std::optional<PunchedMesh> punched;
  try {
    punched = punch_hole(mesh, hole, PunchOptions{cfg.min_angle_deg});
  } catch (const Error&) {
    return out;
  }
  const double predicted = dt.scale(best_radius) * values[best];
  Evaluation e;
  try {
    e = evaluate(punched->mesh, data, cfg);
  } catch (const ResonanceError&) {
    return out;
  }
  out.record.hole_center = hole.center;
  out.record.hole_radius = best_radius;
  out.record.predicted_change = predicted;
  const double actual = e.j.j_total - start.j.j_total;
  if (actual > predicted + 0.5 * std::abs(predicted)) {
    out.record.rolled_back = true;
    return out;
  }
  out.mesh = std::move(punched->mesh);
  out.state = std::move(e.state);
  IterationRecord r = base_record(out.mesh, e.j);
  r.kind = "topology";
  r.accepted = true;
  r.holes_nucleated = 1;
  r.hole_center = hole.center;
  r.hole_radius = best_radius;
  r.predicted_change = predicted;
  out.record = r;
  return out;
}

namespace {

void write_snapshot(const Mesh& mesh, const Vector& state, const std::string& dir, int iter) {
  char name[32];
  std::snprintf(name, sizeof(name), "iter_%04d.vtk", iter);
  std::vector<double> eta(state.data(), state.data() + state.size());
  export_vtk(mesh, {VtkField{"eta", std::move(eta)}}, (std::filesystem::path(dir) / name).string());
}

}  // namespace

OptimizeResult run(const Mesh& mesh, const ProblemData& data, const OptimizeConfig& cfg) {
  cfg.validate();
  data.validate();
  OptimizeResult result{{}, mesh, false, "max_iters"};
  if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);

  const Evaluation init = evaluate(mesh, data, cfg);
  IterationRecord first = base_record(mesh, init.j);
  first.kind = "initial";
  first.accepted = true;
  result.history.push_back(first);
  if (!cfg.output_dir.empty()) write_snapshot(mesh, init.state, cfg.output_dir, 0);

  OptimizeConfig local = cfg;
  if (local.area.enabled && !(local.area.target > 0.0)) local.area.target = mesh.total_area();

  double step = cfg.step0;
  double last_decrease = 1.0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    if (last_decrease < cfg.stop_tol) {
      result.stop_reason = "stop_tol";
      break;
    }
    const double j_prev = result.history.back().j;
    StepResult s{result.mesh, {}, {}};
    try {
      s = descent_step(result.mesh, data, local, step, j_prev);
    } catch (const StallError&) {
      result.stalled = true;
      result.stop_reason = "stall";
      break;
    }
    s.record.iter = it;
    if (s.record.step > 0.0) step = std::min(cfg.step0, s.record.step / cfg.shrink);
    result.mesh = s.mesh;
    result.history.push_back(s.record);

    if (cfg.topo.enabled && it % cfg.topo.every == 0) {
      StepResult ts = topology_step(result.mesh, data, local);
      ts.record.iter = it;
      result.mesh = ts.mesh;
      result.history.push_back(ts.record);
      s.state = ts.state;
    }
    if (!cfg.output_dir.empty() && s.state.size() == result.mesh.num_nodes()) {
      write_snapshot(result.mesh, s.state, cfg.output_dir, it);
    }
    const double j_new = result.history.back().j;
    last_decrease = j_prev != 0.0 ? (j_prev - j_new) / std::abs(j_prev) : 0.0;
  }
  if (!cfg.output_dir.empty()) {
    write_history_csv(result.history, (std::filesystem::path(cfg.output_dir) / "history.csv").string());
  }
  return result;
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_history_csv(const std::vector<IterationRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out.precision(17);
  out << "iter,kind,J,J_gradient_misfit,J_value_misfit,abs_DJ,step,accepted,backtracks,mu,area,min_angle_deg,"
         "holes_nucleated,hole_x,hole_y,hole_radius,predicted_change,rolled_back\r\n";
  for (const auto& r : history) {
    out << r.iter << ',' << csv_quote(r.kind) << ',' << r.j << ',' << r.j_gradient_misfit << ',' << r.j_value_misfit << ','
        << r.dj << ',' << r.step << ',' << (r.accepted ? 1 : 0) << ',' << r.backtracks << ',' << r.mu << ','
        << r.area << ',' << r.min_angle << ',' << r.holes_nucleated << ',';
    if (r.hole_center) {
      out << r.hole_center->x() << ',' << r.hole_center->y();
    } else {
      out << ',';
    }
    out << ',' << r.hole_radius << ',' << r.predicted_change << ',' << (r.rolled_back ? 1 : 0) << "\r\n";
  }
}

bool history_monotone(const std::vector<IterationRecord>& history, double armijo_c) {
  for (std::size_t i = 1; i < history.size(); ++i) {
    const auto& r = history[i];
    if (!r.accepted) continue;
    const double bound = history[i - 1].j - (r.kind == "descent" ? armijo_c * r.step * r.dj : 0.0);
    if (r.j > bound) return false;
  }
  return true;
}

}  // namespace helmopt
