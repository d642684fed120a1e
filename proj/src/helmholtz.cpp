#include "helmopt/helmholtz.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace helmopt {

std::string to_string(BcVariant v) {
  switch (v) {
    case BcVariant::Dirichlet:
      return "dirichlet";
    case BcVariant::Neumann:
      return "neumann";
    case BcVariant::Obstacle:
      return "obstacle";
    case BcVariant::AllDirichlet:
      return "all_dirichlet";
  }
  return "?";
}

BcVariant bc_variant_from_string(const std::string& name) {
  if (name == "dirichlet") return BcVariant::Dirichlet;
  if (name == "neumann") return BcVariant::Neumann;
  if (name == "obstacle") return BcVariant::Obstacle;
  if (name == "all_dirichlet") return BcVariant::AllDirichlet;
  throw InvalidArgument("unknown boundary-condition variant '" + name +
                        "' (expected dirichlet, neumann, obstacle or all_dirichlet)");
}

std::string to_string(AdjointConvention c) { return c == AdjointConvention::Section3 ? "section3" : "section4"; }

AdjointConvention adjoint_convention_from_string(const std::string& name) {
  if (name == "section3") return AdjointConvention::Section3;
  if (name == "section4") return AdjointConvention::Section4;
  throw InvalidArgument("unknown adjoint convention '" + name + "' (expected section3 or section4)");
}

std::vector<BoundaryTag> dirichlet_tags(const Mesh& mesh, BcVariant variant) {
  std::vector<BoundaryTag> out;
  if (variant == BcVariant::Obstacle && !mesh.has_tag(BoundaryTag::Obstacle)) {
    throw LookupError("obstacle variant needs a boundary tagged Obstacle");
  }
  for (BoundaryTag tag : mesh.tags()) {
    bool essential = false;
    switch (tag) {
      case BoundaryTag::Hole:
        essential = true;
        break;
      case BoundaryTag::Outer:
        essential = variant != BcVariant::Neumann;
        break;
      case BoundaryTag::Obstacle:
        essential = variant == BcVariant::AllDirichlet;
        break;
    }
    if (essential) out.push_back(tag);
  }
  return out;
}

std::vector<BoundaryTag> natural_tags(const Mesh& mesh, BcVariant variant) {
  const auto ess = dirichlet_tags(mesh, variant);
  std::vector<BoundaryTag> out;
  for (BoundaryTag tag : mesh.tags()) {
    if (std::find(ess.begin(), ess.end(), tag) == ess.end()) out.push_back(tag);
  }
  return out;
}

void ProblemData::validate() const {
  if (!std::isfinite(k2)) throw InvalidArgument("k2 must be finite");
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
}

HelmholtzSystem::HelmholtzSystem(const Mesh& mesh, double k2, BcVariant variant, const SolverOptions& options)
    : mesh_(&mesh), k2_(k2), variant_(variant), options_(options) {
  k_ = assemble_stiffness(mesh);
  m_ = assemble_mass(mesh);
  const EssentialBC bc = dirichlet_bc(mesh, dirichlet_tags(mesh, variant));
  const SparseMatrix op = k_ - k2 * m_;
  sys_ = reduce_pattern(op, bc);
  if (sys_.free_dofs.empty()) return;
  lu_ = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
  lu_->analyzePattern(sys_.matrix);
  lu_->factorize(sys_.matrix);
  if (lu_->info() != Eigen::Success) {
    std::ostringstream os;
    os << "Helmholtz operator is singular at k2=" << k2;
    throw ResonanceError(os.str(), k2);
  }

  // inverse iteration with the same factorization: distance to the nearest
  // discrete eigenvalue is ‖x‖_M / ‖(K−k²M)⁻¹ M x‖_M
  const SparseMatrix mr = reduce_pattern(m_, bc).matrix;
  const SparseMatrix kr = reduce_pattern(k_, bc).matrix;
  std::mt19937 rng(options.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Vector x(static_cast<Index>(sys_.free_dofs.size()));
  for (Index i = 0; i < x.size(); ++i) x[i] = uni(rng);
  x /= std::sqrt(x.dot(mr * x));
  double dist = 0.0;
  for (int it = 0; it < options.inverse_iterations; ++it) {
    const Vector y = lu_->solve(mr * x);
    const double ny = std::sqrt(std::max(y.dot(mr * y), 1e-300));
    dist = 1.0 / ny;
    x = y / ny;
  }
  if (!x.allFinite()) throw ResonanceError("Helmholtz operator is numerically singular", k2);
  const double rq = x.dot(kr * x) / x.dot(mr * x);
  nearest_ = rq >= k2 ? k2 + dist : k2 - dist;
  margin_ = dist / std::max(std::abs(nearest_), 1.0);
  if (margin_ < options.resonance_threshold) {
    std::ostringstream os;
    os << "k2=" << k2 << " is within relative distance " << margin_ << " of the discrete eigenvalue " << nearest_;
    throw ResonanceError(os.str(), nearest_);
  }
}

Vector HelmholtzSystem::solve(const Vector& load) const {
  if (load.size() != mesh_->num_nodes()) throw InvalidArgument("load vector size does not match the mesh");
  if (sys_.free_dofs.empty()) return Vector::Zero(mesh_->num_nodes());
  const Vector b = sys_.restrict_vector(load);
  const Vector x = lu_->solve(b);
  const double nb = b.norm();
  last_residual_ = nb > 0.0 ? (sys_.matrix * x - b).norm() / nb : 0.0;
  if (!x.allFinite() || last_residual_ > options_.residual_tol) {
    std::ostringstream os;
    os << "Helmholtz solve residual " << last_residual_ << " exceeds tolerance " << options_.residual_tol;
    throw SolverError(os.str());
  }
  return sys_.expand(x);
}

Vector state_load(const Mesh& mesh, const ProblemData& data) { return assemble_load(mesh, data.f); }

Vector adjoint_load(const Mesh& mesh, const ProblemData& data, const Vector& state, const SparseMatrix& k,
                    const SparseMatrix& m) {
  return 2.0 * (k * state - assemble_vector_load(mesh, data.A)) + 2.0 * (m * state - assemble_load(mesh, data.eta0));
}

namespace {

SolveReport make_report(const HelmholtzSystem& system, Vector values, const std::string& name) {
  SolveReport r;
  r.solution = Field(std::move(values), name);
  r.residual = system.last_residual();
  r.resonance_margin = system.resonance_margin();
  r.nearest_eigenvalue = system.nearest_eigenvalue();
  return r;
}

}  // namespace

SolveReport solve_state(const HelmholtzSystem& system, const ProblemData& data) {
  data.validate();
  return make_report(system, system.solve(state_load(system.mesh(), data)), "eta");
}

SolveReport solve_state(const Mesh& mesh, const ProblemData& data, BcVariant variant, const SolverOptions& options) {
  const HelmholtzSystem system(mesh, data.k2, variant, options);
  return solve_state(system, data);
}

SolveReport solve_adjoint(const HelmholtzSystem& system, const ProblemData& data, const Vector& state,
                          AdjointConvention convention) {
  const double sign = convention == AdjointConvention::Section3 ? 1.0 : -1.0;
  const Vector rhs = sign * adjoint_load(system.mesh(), data, state, system.stiffness(), system.mass());
  return make_report(system, system.solve(rhs), "p");
}

SolveReport solve_adjoint(const Mesh& mesh, const ProblemData& data, const Vector& state, BcVariant variant,
                          AdjointConvention convention, const SolverOptions& options) {
  const HelmholtzSystem system(mesh, data.k2, variant, options);
  return solve_adjoint(system, data, state, convention);
}

std::vector<char> hole_element_mask(const Mesh& mesh, const HoleSpec& hole) {
  std::vector<char> mask(static_cast<std::size_t>(mesh.num_triangles()), 0);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    mask[t] = (mesh.centroid(t) - hole.center).norm() < hole.radius;
  }
  return mask;
}

SolveReport solve_perturbed_source(const HelmholtzSystem& system, const ProblemData& data, const HoleSpec& hole) {
  data.validate();
  const Mesh& mesh = system.mesh();
  if (!(hole.radius > 0.0)) throw InvalidArgument("hole radius must be positive");
  if (mesh.locate(hole.center) < 0) throw GeometryError("hole center lies outside the mesh");
  const double h = local_mesh_size(mesh, hole.center, hole.radius);
  if (h > 0.25 * hole.radius * (1.0 + 1e-9)) {
    std::ostringstream os;
    os << "local mesh size " << h << " exceeds eps/4 = " << 0.25 * hole.radius
       << "; refine the mesh near the perturbation center";
    throw ResolutionError(os.str());
  }
  const auto mask = hole_element_mask(mesh, hole);
  const Vector base_load = state_load(mesh, data);
  const Vector load = base_load - (1.0 - data.gamma) * assemble_load(mesh, data.f, &mask);
  const Vector eta = system.solve(base_load);
  SolveReport r = make_report(system, system.solve(load), "eta_eps");
  r.h1_change = h1_norm(system.stiffness(), system.mass(), r.solution.values - eta);
  return r;
}

SolveReport solve_perturbed_source(const Mesh& mesh, const ProblemData& data, const HoleSpec& hole, BcVariant variant,
                                   const SolverOptions& options) {
  const HelmholtzSystem system(mesh, data.k2, variant, options);
  return solve_perturbed_source(system, data, hole);
}

Vector solve_bordered(const Mesh& mesh, double lambda, const Vector& eigenfunction, BcVariant variant,
                      const Vector& rhs) {
  const SparseMatrix k = assemble_stiffness(mesh);
  const SparseMatrix m = assemble_mass(mesh);
  const EssentialBC bc = dirichlet_bc(mesh, dirichlet_tags(mesh, variant));
  const ReducedSystem sys = reduce_pattern(k - lambda * m, bc);
  const Index n = static_cast<Index>(sys.free_dofs.size());
  const Vector me = sys.restrict_vector(m * eigenfunction);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(sys.matrix.nonZeros() + 2 * n));
  for (Index col = 0; col < sys.matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(sys.matrix, col); it; ++it) trip.emplace_back(it.row(), col, it.value());
  }
  for (Index i = 0; i < n; ++i) {
    if (me[i] == 0.0) continue;
    trip.emplace_back(i, n, me[i]);
    trip.emplace_back(n, i, me[i]);
  }
  SparseMatrix bordered(n + 1, n + 1);
  bordered.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(bordered);
  if (lu.info() != Eigen::Success) throw SolverError("bordered adjoint system is singular");
  Vector b = Vector::Zero(n + 1);
  b.head(n) = sys.restrict_vector(rhs);
  const Vector x = lu.solve(b);
  if (!x.allFinite()) throw SolverError("bordered adjoint solve produced non-finite values");
  return sys.expand(x.head(n));
}

}  // namespace helmopt
