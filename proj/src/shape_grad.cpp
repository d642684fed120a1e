#include "helmopt/shape_grad.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace helmopt {

double ShapeGradientResult::term(const std::string& name) const {
  for (const auto& [key, value] : terms) {
    if (key == name) return value;
  }
  throw LookupError("no shape-gradient term named '" + name + "'");
}

FunctionalValue evaluate_J(const Mesh& mesh, const ProblemData& data, const Vector& state,
                           const std::vector<char>* mask) {
  if (state.size() != mesh.num_nodes()) throw InvalidArgument("state size does not match the mesh");
  const auto grads = element_gradients(mesh, state);
  FunctionalValue out;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    if (mask && !(*mask)[t]) continue;
    const auto& tri = mesh.triangle(t);
    const double w = mesh.signed_area(t) / 3.0;
    for (const auto& bc : kEdgeMidpoints) {
      const double eta = bc[0] * state[tri[0]] + bc[1] * state[tri[1]] + bc[2] * state[tri[2]];
      const double dv = eta - data.eta0.eval(mesh, t, bc);
      const Vec2 dg = grads[t] - data.A.eval(mesh, t, bc);
      out.j_gradient_misfit += w * dg.squaredNorm();
      out.j_value_misfit += w * dv * dv;
    }
  }
  out.j_total = out.j_gradient_misfit + out.j_value_misfit;
  return out;
}

double integrate_density(const Mesh& mesh, const Vector& density, const VelocityField& velocity) {
  const auto vel = velocity.sample(mesh);
  double total = 0.0;
  for (BoundaryTag tag : mesh.tags()) {
    const Vector vn = normal_velocity(mesh, tag, vel);
    total += boundary_integral(mesh, tag, Vector(density.array() * vn.array()));
  }
  return total;
}

Vector boundary_misfit(const Mesh& mesh, BoundaryTag tag, const ProblemData& data, const Vector& state) {
  const auto grad = boundary_gradient(mesh, tag, state);
  Vector out = Vector::Zero(mesh.num_nodes());
  for (Index i : boundary_nodes(mesh, tag)) {
    const double dv = state[i] - data.eta0.at_node(mesh, i);
    out[i] = (grad[i] - data.A.at_node(mesh, i)).squaredNorm() + dv * dv;
  }
  return out;
}

Vector second_normal_derivative(const Mesh& mesh, BoundaryTag tag, double k2, const ScalarData& f,
                                const Vector& state) {
  const Vector lap_t = tangential_laplacian(mesh, tag, state);
  const Vector dn = normal_derivative(mesh, tag, state);
  Vector out = Vector::Zero(mesh.num_nodes());
  for (const auto& lg : boundary_geometry(mesh, tag).loops) {
    for (std::size_t i = 0; i < lg.loop.nodes.size(); ++i) {
      const Index v = lg.loop.nodes[i];
      out[v] = -k2 * state[v] - f.at_node(mesh, v) - lg.curvature[i] * dn[v] - lap_t[v];
    }
  }
  return out;
}

namespace {

// ∂η/∂n ∂p/∂n − 2(∂η/∂n)² + misfit at the nodes of an essential tag.
Vector dirichlet_density(const Mesh& mesh, BoundaryTag tag, const ProblemData& data, const Vector& eta,
                         const Vector& p, double adjoint_sign) {
  const Vector en = normal_derivative(mesh, tag, eta);
  const Vector pn = normal_derivative(mesh, tag, p);
  const Vector mis = boundary_misfit(mesh, tag, data, eta);
  Vector out = Vector::Zero(mesh.num_nodes());
  for (Index i : boundary_nodes(mesh, tag)) out[i] = adjoint_sign * en[i] * pn[i] - 2.0 * en[i] * en[i] + mis[i];
  return out;
}

struct NaturalTerms {
  double curvature_term = 0.0;   // ∫ −∂²η/∂n² V·n p
  double tangential_term = 0.0;  // ∫ ∇η·∇_Γ(V·n) p
  double misfit_term = 0.0;      // ∫ misfit V·n
  Vector density;                // misfit − p ∂²η/∂n² − D(p Dη)
};

// Terms on a natural boundary; D is the centered tangential difference, for
// which summation by parts against the trapezoidal rule is exact.
NaturalTerms natural_terms(const Mesh& mesh, BoundaryTag tag, const ProblemData& data, double k2, const Vector& eta,
                           const Vector& p, const Vector& vn) {
  NaturalTerms out;
  const Vector etann = second_normal_derivative(mesh, tag, k2, data.f, eta);
  const Vector deta = tangential_gradient(mesh, tag, eta);
  const Vector dvn = tangential_gradient(mesh, tag, vn);
  const Vector mis = boundary_misfit(mesh, tag, data, eta);
  const Vector pdeta = p.array() * deta.array();
  const Vector dpdeta = tangential_gradient(mesh, tag, pdeta);
  out.curvature_term = boundary_integral(mesh, tag, Vector(-etann.array() * vn.array() * p.array()));
  out.tangential_term = boundary_integral(mesh, tag, Vector(deta.array() * dvn.array() * p.array()));
  out.misfit_term = boundary_integral(mesh, tag, Vector(mis.array() * vn.array()));
  out.density = Vector::Zero(mesh.num_nodes());
  for (Index i : boundary_nodes(mesh, tag)) out.density[i] = mis[i] - p[i] * etann[i] - dpdeta[i];
  return out;
}

void check_corners(const Mesh& mesh, BoundaryTag tag, std::vector<std::string>& warnings) {
  for (const auto& lg : boundary_geometry(mesh, tag).loops) {
    for (std::size_t i = 0; i < lg.loop.nodes.size(); ++i) {
      const double turn = std::abs(lg.curvature[i]) * lg.node_weight[i];
      if (turn > 0.5) {
        std::ostringstream os;
        os << to_string(tag) << " boundary has a corner at node " << lg.loop.nodes[i] << " (turning angle " << turn
           << " rad); curvature and tangential terms are unreliable there";
        warnings.push_back(os.str());
        return;
      }
    }
  }
}

}  // namespace

ShapeGradientResult dj_dirichlet(const Mesh& mesh, const ProblemData& data, const VelocityField& velocity,
                                 const SolverOptions& options) {
  data.validate();
  const HelmholtzSystem system(mesh, data.k2, BcVariant::Dirichlet, options);
  const Vector eta = solve_state(system, data).solution.values;
  const Vector p = solve_adjoint(system, data, eta, AdjointConvention::Section3).solution.values;
  const auto vel = velocity.sample(mesh);

  ShapeGradientResult out;
  out.convention = AdjointConvention::Section3;
  Vector density = Vector::Zero(mesh.num_nodes());
  double adjoint_part = 0.0, flux_part = 0.0, misfit_part = 0.0;
  for (BoundaryTag tag : dirichlet_tags(mesh, BcVariant::Dirichlet)) {
    const Vector vn = normal_velocity(mesh, tag, vel);
    const Vector en = normal_derivative(mesh, tag, eta);
    const Vector pn = normal_derivative(mesh, tag, p);
    const Vector mis = boundary_misfit(mesh, tag, data, eta);
    adjoint_part += boundary_integral(mesh, tag, Vector(en.array() * pn.array() * vn.array()));
    flux_part += boundary_integral(mesh, tag, Vector(-2.0 * en.array().square() * vn.array()));
    misfit_part += boundary_integral(mesh, tag, Vector(mis.array() * vn.array()));
    const Vector d = dirichlet_density(mesh, tag, data, eta, p, 1.0);
    for (Index i : boundary_nodes(mesh, tag)) density[i] = d[i];
  }
  out.terms = {{"adjoint_flux", adjoint_part}, {"state_flux", flux_part}, {"misfit", misfit_part}};
  out.dj = integrate_density(mesh, density, velocity);
  out.density = std::move(density);
  return out;
}

ShapeGradientResult dj_neumann(const Mesh& mesh, const ProblemData& data, const VelocityField& velocity,
                               const SolverOptions& options) {
  data.validate();
  const HelmholtzSystem system(mesh, data.k2, BcVariant::Neumann, options);
  const Vector eta = solve_state(system, data).solution.values;
  const Vector p = solve_adjoint(system, data, eta, AdjointConvention::Section3).solution.values;
  const auto vel = velocity.sample(mesh);

  ShapeGradientResult out;
  out.convention = AdjointConvention::Section3;
  double curv = 0.0, tang = 0.0, mis = 0.0, ess = 0.0;
  for (BoundaryTag tag : natural_tags(mesh, BcVariant::Neumann)) {
    check_corners(mesh, tag, out.warnings);
    const NaturalTerms nt = natural_terms(mesh, tag, data, data.k2, eta, p, normal_velocity(mesh, tag, vel));
    curv += nt.curvature_term;
    tang += nt.tangential_term;
    mis += nt.misfit_term;
  }
  // holes stay Dirichlet in this variant
  for (BoundaryTag tag : dirichlet_tags(mesh, BcVariant::Neumann)) {
    const Vector d = dirichlet_density(mesh, tag, data, eta, p, 1.0);
    ess += boundary_integral(mesh, tag, Vector(d.array() * normal_velocity(mesh, tag, vel).array()));
  }
  out.terms = {{"second_normal", curv}, {"tangential", tang}, {"misfit", mis}};
  if (!dirichlet_tags(mesh, BcVariant::Neumann).empty()) out.terms.emplace_back("essential_tags", ess);
  out.dj = curv + tang + mis + ess;
  return out;
}

ShapeGradientResult dj_with_eigenvalue(const Mesh& mesh, const EigenPair& pair, const ProblemData& data,
                                       const VelocityField& velocity, BcVariant variant,
                                       const EigenCluster* cluster) {
  if (cluster && cluster->multiplicity > 1) {
    throw MultiplicityError("the functional derivative is only available for a simple eigenvalue (multiplicity " +
                            std::to_string(cluster->multiplicity) + ")");
  }
  const double lambda_dot = simple_eig_derivative(mesh, pair, velocity, variant, cluster);
  const Vector& eta = pair.eigenfunction.values;
  const SparseMatrix k = assemble_stiffness(mesh);
  const SparseMatrix m = assemble_mass(mesh);
  ProblemData d = data;
  d.k2 = pair.lambda;
  const Vector rhs = adjoint_load(mesh, d, eta, k, m);

  // the adjoint carries ∂p/∂n = 0 on the whole boundary; for a natural
  // state this operator is singular and the bordered system is used
  Vector p;
  if (dirichlet_tags(mesh, variant).empty()) {
    p = solve_bordered(mesh, pair.lambda, eta, BcVariant::Neumann, rhs);
  } else {
    if (!dirichlet_tags(mesh, BcVariant::Neumann).empty()) {
      throw PreconditionError("eigenvalue functional derivative does not support Hole boundaries");
    }
    const HelmholtzSystem adj(mesh, pair.lambda, BcVariant::Neumann);
    p = adj.solve(rhs);
  }

  const auto vel = velocity.sample(mesh);
  double volume = lambda_dot * eta.dot(m * p);
  double adjoint_part = 0.0, flux_part = 0.0, misfit_part = 0.0;
  for (BoundaryTag tag : mesh.tags()) {
    const Vector vn = normal_velocity(mesh, tag, vel);
    const Vector en = normal_derivative(mesh, tag, eta);
    const Vector pn = normal_derivative(mesh, tag, p);
    const Vector mis = boundary_misfit(mesh, tag, d, eta);
    adjoint_part += boundary_integral(mesh, tag, Vector(-en.array() * pn.array() * vn.array()));
    flux_part += boundary_integral(mesh, tag, Vector(-2.0 * en.array().square() * vn.array()));
    misfit_part += boundary_integral(mesh, tag, Vector(mis.array() * vn.array()));
  }
  ShapeGradientResult out;
  out.convention = AdjointConvention::Section3;
  out.terms = {{"eigenvalue_coupling", volume},
               {"eigenvalue_derivative", lambda_dot},
               {"adjoint_flux", adjoint_part},
               {"state_flux", flux_part},
               {"misfit", misfit_part}};
  out.dj = volume + adjoint_part + flux_part + misfit_part;
  return out;
}

ShapeGradientResult dj_obstacle(const Mesh& mesh, const ProblemData& data, const VelocityField& velocity,
                                ObstacleMode mode, const EigenPair* pair, const SolverOptions& options) {
  if (!mesh.has_tag(BoundaryTag::Obstacle)) throw LookupError("dj_obstacle needs a boundary tagged Obstacle");
  data.validate();
  const auto vel = velocity.sample(mesh);
  ShapeGradientResult out;

  if (mode == ObstacleMode::Plain) {
    const HelmholtzSystem system(mesh, data.k2, BcVariant::Obstacle, options);
    const Vector eta = solve_state(system, data).solution.values;
    const Vector p = solve_adjoint(system, data, eta, AdjointConvention::Section3).solution.values;
    out.convention = AdjointConvention::Section3;
    check_corners(mesh, BoundaryTag::Obstacle, out.warnings);
    const Vector vn_k = normal_velocity(mesh, BoundaryTag::Obstacle, vel);
    const NaturalTerms nt = natural_terms(mesh, BoundaryTag::Obstacle, data, data.k2, eta, p, vn_k);
    Vector density = nt.density;
    double outer = 0.0;
    for (BoundaryTag tag : dirichlet_tags(mesh, BcVariant::Obstacle)) {
      const Vector d = dirichlet_density(mesh, tag, data, eta, p, 1.0);
      outer += boundary_integral(mesh, tag, Vector(d.array() * normal_velocity(mesh, tag, vel).array()));
      for (Index i : boundary_nodes(mesh, tag)) density[i] = d[i];
    }
    out.terms = {{"obstacle_second_normal", nt.curvature_term},
                 {"obstacle_tangential", nt.tangential_term},
                 {"obstacle_misfit", nt.misfit_term},
                 {"outer", outer}};
    out.dj = nt.curvature_term + nt.tangential_term + nt.misfit_term + outer;
    out.density = std::move(density);
    return out;
  }

  EigenPair base;
  if (pair) {
    base = *pair;
  } else {
    base = solve_eigs(mesh, BcVariant::Obstacle, 1).front();
  }
  const double lambda = base.lambda;
  const Vector& eta = base.eigenfunction.values;
  ProblemData d = data;
  d.k2 = lambda;
  d.f = ScalarData::constant(0.0);
  const SparseMatrix k = assemble_stiffness(mesh);
  const SparseMatrix m = assemble_mass(mesh);
  const Vector rhs = -adjoint_load(mesh, d, eta, k, m);
  const Vector p = solve_bordered(mesh, lambda, eta, BcVariant::Obstacle, rhs);
  out.convention = AdjointConvention::Section4;
  check_corners(mesh, BoundaryTag::Obstacle, out.warnings);

  // eigenvalue derivative in the stated form: |∇η|² on every boundary and
  // −λη² on ∂K only
  double lambda_dot_stated = 0.0;
  double misfit_part = 0.0;
  for (BoundaryTag tag : mesh.tags()) {
    const Vector vn = normal_velocity(mesh, tag, vel);
    const auto grad = boundary_gradient(mesh, tag, eta);
    Vector g2 = Vector::Zero(mesh.num_nodes());
    for (Index i : boundary_nodes(mesh, tag)) g2[i] = grad[i].squaredNorm();
    lambda_dot_stated += boundary_integral(mesh, tag, Vector(g2.array() * vn.array()));
    if (tag == BoundaryTag::Obstacle) {
      lambda_dot_stated -= lambda * boundary_integral(mesh, tag, Vector(eta.array().square() * vn.array()));
    }
    const Vector mis = boundary_misfit(mesh, tag, d, eta);
    misfit_part += boundary_integral(mesh, tag, Vector(mis.array() * vn.array()));
  }
  const Vector vn_k = normal_velocity(mesh, BoundaryTag::Obstacle, vel);
  const NaturalTerms nt = natural_terms(mesh, BoundaryTag::Obstacle, d, lambda, eta, p, vn_k);
  const double coupling = -lambda_dot_stated * eta.dot(m * p);
  const double obstacle_part = -(nt.curvature_term + nt.tangential_term);
  out.terms = {{"misfit", misfit_part},
               {"eigenvalue_coupling", coupling},
               {"eigenvalue_derivative_stated", lambda_dot_stated},
               {"eigenvalue_derivative", simple_eig_derivative(mesh, base, velocity, BcVariant::Obstacle)},
               {"obstacle_adjoint", obstacle_part}};
  out.dj = misfit_part + coupling + obstacle_part;
  return out;
}

FdResult fd_derivative(const Mesh& mesh, const VelocityField& velocity, const std::vector<double>& t_list,
                       const MeshFunctional& functional) {
  if (t_list.empty()) throw InvalidArgument("fd_derivative needs at least one step");
  FdResult out;
  for (double t : t_list) {
    if (!(t > 0.0)) throw InvalidArgument("finite-difference steps must be positive");
    FdRow row;
    row.t = t;
    row.j_plus = functional(deform(mesh, velocity, t));
    row.j_minus = functional(deform(mesh, velocity, -t));
    row.central = (row.j_plus - row.j_minus) / (2.0 * t);
    out.rows.push_back(row);
  }
  const std::size_t n = out.rows.size();
  out.derivative = out.rows.back().central;
  out.richardson = out.derivative;
  if (n >= 2) {
    const double r = out.rows[n - 2].t / out.rows[n - 1].t;
    out.richardson = out.rows[n - 1].central + (out.rows[n - 1].central - out.rows[n - 2].central) / (r * r - 1.0);
    out.derivative = out.richardson;
  }
  if (n >= 3) {
    const double d1 = out.rows[n - 3].central - out.rows[n - 2].central;
    const double d2 = out.rows[n - 2].central - out.rows[n - 1].central;
    const double r = out.rows[n - 2].t / out.rows[n - 1].t;
    if (d1 != 0.0 && d2 != 0.0) out.observed_order = std::log(std::abs(d1 / d2)) / std::log(r);
  }
  return out;
}

FdResult fd_shape_derivative(const Mesh& mesh, const ProblemData& data, const VelocityField& velocity,
                             const std::vector<double>& t_list, BcVariant variant, const SolverOptions& options) {
  const auto nodal = velocity.sample(mesh);
  const VelocityField fixed = VelocityField::nodal(nodal, velocity.name());
  return fd_derivative(mesh, fixed, t_list, [&](const Mesh& m) {
    const HelmholtzSystem system(m, data.k2, variant, options);
    return evaluate_J(m, data, solve_state(system, data).solution.values).j_total;
  });
}

EigenPair track_eigenpair(const Mesh& mesh, BcVariant variant, const Vector& reference, int search_count) {
  const auto pairs = solve_eigs(mesh, variant, search_count);
  const SparseMatrix m = assemble_mass(mesh);
  const Vector mref = m * reference;
  std::size_t best = 0;
  double overlap = -1.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double o = std::abs(pairs[i].eigenfunction.values.dot(mref));
    if (o > overlap) {
      overlap = o;
      best = i;
    }
  }
  EigenPair out = pairs[best];
  if (out.eigenfunction.values.dot(mref) < 0.0) out.eigenfunction.values = -out.eigenfunction.values;
  return out;
}

FdResult fd_eigen_functional(const Mesh& mesh, const EigenPair& pair, const ProblemData& data,
                             const VelocityField& velocity, const std::vector<double>& t_list, BcVariant variant) {
  const auto nodal = velocity.sample(mesh);
  const VelocityField fixed = VelocityField::nodal(nodal, velocity.name());
  const int search = pair.index + 3;
  return fd_derivative(mesh, fixed, t_list, [&](const Mesh& m) {
    const EigenPair tracked = track_eigenpair(m, variant, pair.eigenfunction.values, search);
    ProblemData d = data;
    d.k2 = tracked.lambda;
    return evaluate_J(m, d, tracked.eigenfunction.values).j_total;
  });
}

}  // namespace helmopt
