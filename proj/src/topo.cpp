#include "helmopt/topo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace helmopt {

double ScaleFunction::operator()(double eps) const { return coefficient * std::pow(eps, power); }

TopoField topo_source_field(const Mesh& mesh, const ProblemData& data, BcVariant variant,
                            const SolverOptions& options) {
  data.validate();
  const HelmholtzSystem system(mesh, data.k2, variant, options);
  const Vector eta = solve_state(system, data).solution.values;
  const Vector p = solve_adjoint(system, data, eta, AdjointConvention::Section4).solution.values;
  Vector values(mesh.num_nodes());
  for (Index i = 0; i < mesh.num_nodes(); ++i) values[i] = (1.0 - data.gamma) * data.f.at_node(mesh, i) * p[i];
  TopoField out;
  out.values = Field(std::move(values), "topo_source");
  out.scale = {"pi*eps^2", kPi, 2.0};
  out.convention = AdjointConvention::Section4;
  return out;
}

namespace {

std::vector<double> sorted_descending(std::vector<double> eps) {
  if (eps.empty()) throw InvalidArgument("empty epsilon list");
  for (double e : eps) {
    if (!(e > 0.0)) throw InvalidArgument("epsilon values must be positive");
  }
  std::sort(eps.begin(), eps.end(), std::greater<>());
  return eps;
}

void finish_table(QuotientTable& table) {
  const std::size_t n = table.rows.size();
  table.limit = table.rows.back().quotient;
  if (n >= 2) {
    const auto& a = table.rows[n - 2];
    const auto& b = table.rows[n - 1];
    const double r = a.eps / b.eps;
    table.limit = b.quotient + (b.quotient - a.quotient) / (r - 1.0);
  }
  if (n >= 3) {
    const double d1 = table.rows[n - 3].quotient - table.rows[n - 2].quotient;
    const double d2 = table.rows[n - 2].quotient - table.rows[n - 1].quotient;
    const double r = table.rows[n - 2].eps / table.rows[n - 1].eps;
    if (d1 != 0.0 && d2 != 0.0) table.observed_order = std::log(std::abs(d1 / d2)) / std::log(r);
  }
  if (n >= 2) {
    std::vector<double> x, y;
    for (const auto& row : table.rows) {
      x.push_back(row.eps * row.eps);
      y.push_back(row.delta_j);
    }
    table.fit_eps2 = oracle::linear_fit(x, y);
  }
}

Vector aligned_first_eigenfunction(const Mesh& mesh, const Vector& reference, double& lambda) {
  const EigenPair pair = solve_eigs(mesh, BcVariant::Dirichlet, 1).front();
  lambda = pair.lambda;
  Vector v = pair.eigenfunction.values;
  if (v.dot(assemble_mass(mesh) * reference) < 0.0) v = -v;
  return v;
}

}  // namespace

Vector transfer_to_punched(const Mesh& original, const PunchedMesh& punched, const Vector& values) {
  Vector out = Vector::Constant(punched.mesh.num_nodes(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t old = 0; old < punched.node_map.size(); ++old) {
    const Index nw = punched.node_map[old];
    if (nw >= 0) out[nw] = values[static_cast<Index>(old)];
  }
  for (Index i = 0; i < out.size(); ++i) {
    if (std::isnan(out[i])) out[i] = evaluate_at(original, values, punched.mesh.node(i));
  }
  return out;
}

QuotientTable topo_quotient(const Mesh& mesh, const ProblemData& data, const Vec2& x0, const std::vector<double>& eps,
                            TopoMode mode, const HoleSpec& reference, BcVariant variant,
                            const SolverOptions& options) {
  data.validate();
  const auto list = sorted_descending(eps);
  QuotientTable table;
  table.mode = mode;

  if (mode == TopoMode::Source) {
    const HelmholtzSystem system(mesh, data.k2, variant, options);
    const Vector eta = solve_state(system, data).solution.values;
    table.j_base = evaluate_J(mesh, data, eta).j_total;
    for (double e : list) {
      HoleSpec hole = reference;
      hole.center = x0;
      hole.radius = e;
      const Vector eta_e = solve_perturbed_source(system, data, hole).solution.values;
      QuotientRow row;
      row.eps = e;
      row.j_eps = evaluate_J(mesh, data, eta_e).j_total;
      row.delta_j = row.j_eps - table.j_base;
      row.scale = kPi * e * e;
      row.quotient = row.delta_j / row.scale;
      table.rows.push_back(row);
    }
  } else {
    const EigenPair base = solve_eigs(mesh, BcVariant::Dirichlet, 1).front();
    ProblemData d = data;
    d.k2 = base.lambda;
    table.j_base = evaluate_J(mesh, d, base.eigenfunction.values).j_total;
    for (double e : list) {
      HoleSpec hole = reference;
      hole.center = x0;
      hole.radius = e;
      const PunchedMesh punched = punch_hole(mesh, hole);
      const Vector ref = transfer_to_punched(mesh, punched, base.eigenfunction.values);
      double lambda_e = 0.0;
      const Vector eta_e = aligned_first_eigenfunction(punched.mesh, ref, lambda_e);
      ProblemData de = data;
      de.k2 = lambda_e;
      QuotientRow row;
      row.eps = e;
      row.j_eps = evaluate_J(punched.mesh, de, eta_e).j_total;
      row.delta_j = row.j_eps - table.j_base;
      row.scale = e * e;
      row.quotient = row.delta_j / row.scale;
      table.rows.push_back(row);
    }
  }
  finish_table(table);
  return table;
}

SourceIdentity source_identity(const Mesh& mesh, const ProblemData& data, const HoleSpec& hole, BcVariant variant,
                               const SolverOptions& options) {
  data.validate();
  const HelmholtzSystem system(mesh, data.k2, variant, options);
  const Vector eta = solve_state(system, data).solution.values;
  const Vector p = solve_adjoint(system, data, eta, AdjointConvention::Section4).solution.values;
  const Vector eta_e = solve_perturbed_source(system, data, hole).solution.values;
  const Vector delta = eta_e - eta;
  const auto mask = hole_element_mask(mesh, hole);
  const Vector f_omega = assemble_load(mesh, data.f, &mask);
  const double dj = evaluate_J(mesh, data, eta_e).j_total - evaluate_J(mesh, data, eta).j_total;
  SourceIdentity out;
  out.lhs = dj - (delta.dot(system.stiffness() * delta) + delta.dot(system.mass() * delta));
  out.rhs = (1.0 - data.gamma) * p.dot(f_omega);
  const double scale = std::max(std::abs(out.lhs), std::abs(out.rhs));
  out.relative_gap = scale > 0.0 ? std::abs(out.lhs - out.rhs) / scale : 0.0;
  return out;
}

Vector hole_adjoint(const Mesh& mesh, const EigenPair& pair, const ProblemData& data) {
  ProblemData d = data;
  d.k2 = pair.lambda;
  const Vector rhs = -adjoint_load(mesh, d, pair.eigenfunction.values, assemble_stiffness(mesh), assemble_mass(mesh));
  return solve_bordered(mesh, pair.lambda, pair.eigenfunction.values, BcVariant::Dirichlet, rhs);
}

namespace {

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

double boundary_distance(const Mesh& mesh, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : mesh.boundary_edges()) {
    best = std::min(best, distance_to_segment(p, mesh.node(e.nodes[0]), mesh.node(e.nodes[1])));
  }
  return best;
}

}  // namespace

std::vector<HoleTopoValue> topo_hole_derivative(const Mesh& mesh, const EigenPair& pair, const ProblemData& data,
                                                const std::vector<Vec2>& points, const HoleSpec& reference,
                                                const EigenCluster* cluster) {
  if (cluster && cluster->multiplicity > 1) {
    throw MultiplicityError("hole topological derivative needs a simple eigenvalue (multiplicity " +
                            std::to_string(cluster->multiplicity) + ")");
  }
  if (!(reference.mes_omega > 0.0)) throw InvalidArgument("mes_omega must be positive");
  for (const Vec2& x : points) {
    if (mesh.locate(x) < 0) throw EvaluationError("query point lies outside the mesh");
    const double h = local_mesh_size(mesh, x);
    if (boundary_distance(mesh, x) < 2.0 * h) throw EvaluationError("query point within 2h of boundary");
  }
  const Vector& eta = pair.eigenfunction.values;
  const Vector p = hole_adjoint(mesh, pair, data);
  std::vector<HoleTopoValue> out;
  for (const Vec2& x : points) {
    HoleTopoValue v;
    v.x0 = x;
    v.eta = evaluate_at(mesh, eta, x);
    v.p = evaluate_at(mesh, p, x);
    v.grad_eta = gradient_at(mesh, eta, x);
    v.grad_p = gradient_at(mesh, p, x);
    const Index t = mesh.locate(x);
    const auto bc = mesh.barycentric(t, x);
    const Vec2 a = data.A.eval(mesh, t, bc);
    const double e0 = data.eta0.eval(mesh, t, bc);
    v.dt = reference.mes_omega * (v.grad_eta.dot(v.grad_p) - pair.lambda * v.eta * v.p -
                                  (v.grad_eta - a).squaredNorm() - (v.eta - e0) * (v.eta - e0));
    out.push_back(v);
  }
  return out;
}

HoleTopoValue topo_hole_derivative(const Mesh& mesh, const EigenPair& pair, const ProblemData& data, const Vec2& x0,
                                   const HoleSpec& reference) {
  return topo_hole_derivative(mesh, pair, data, std::vector<Vec2>{x0}, reference).front();
}

EigHoleExpansion eig_hole_expansion(const Mesh& mesh, const EigenPair& pair, const Vec2& x0, const HoleSpec& hole,
                                    const std::vector<double>& eps) {
  if (!(hole.cap_omega > 0.0)) throw InvalidArgument("cap_omega must be positive");
  const Vector& eta = pair.eigenfunction.values;
  const double eta0 = evaluate_at(mesh, eta, x0);
  EigHoleExpansion out;
  out.lambda0 = pair.lambda;
  out.first_order_coeff = 4.0 * kPi * eta0 * eta0 * hole.cap_omega;
  out.first_order_coeff_linear = 4.0 * kPi * eta0 * hole.cap_omega;
  if (eps.empty()) return out;

  for (double e : sorted_descending(eps)) {
    HoleSpec h = hole;
    h.center = x0;
    h.radius = e;
    const PunchedMesh punched = punch_hole(mesh, h);
    const Vector ref = transfer_to_punched(mesh, punched, eta);
    HoleSweepRow row;
    row.eps = e;
    // follow the branch of `pair`, which need not be the first one
    const EigenPair tracked = track_eigenpair(punched.mesh, BcVariant::Dirichlet, ref, pair.index + 3);
    row.lambda_eps = tracked.lambda;
    const Vector& eta_e = tracked.eigenfunction.values;
    row.delta = row.lambda_eps - pair.lambda;
    row.predicted = out.predicted(e);
    row.h1_change = h1_norm(punched.mesh, Vector(eta_e - ref));
    out.rows.push_back(row);
  }
  if (out.rows.size() >= 2) {
    std::vector<double> xe, xl, y;
    for (const auto& row : out.rows) {
      xe.push_back(row.eps);
      xl.push_back(1.0 / std::abs(std::log(row.eps)));
      y.push_back(row.delta);
    }
    out.fit_eps = oracle::linear_fit(xe, y);
    out.fit_inv_log = oracle::linear_fit(xl, y);
  }
  return out;
}

}  // namespace helmopt
