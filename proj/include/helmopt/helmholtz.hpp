#pragma once

#include "helmopt/fem.hpp"

#include <Eigen/SparseLU>

#include <memory>
#include <optional>
#include <string>

namespace helmopt {

/// Boundary-condition variants. Hole boundaries are always Dirichlet.
///  - Dirichlet: η = 0 on Outer.
///  - Neumann: natural on Outer.
///  - Obstacle: η = 0 on Outer, natural on Obstacle (requires the tag).
///  - AllDirichlet: η = 0 on every tagged boundary.
enum class BcVariant { Dirichlet, Neumann, Obstacle, AllDirichlet };

std::string to_string(BcVariant v);
BcVariant bc_variant_from_string(const std::string& name);

/// Tags carrying an essential condition for `variant` on `mesh`.
std::vector<BoundaryTag> dirichlet_tags(const Mesh& mesh, BcVariant variant);
/// Tags with a natural condition for `variant` on `mesh`.
std::vector<BoundaryTag> natural_tags(const Mesh& mesh, BcVariant variant);

/// Overall sign of the adjoint right-hand side.
///  section3: (K - k²M) p = +[2 ∫(∇η - A)·∇v + 2 ∫(η - η₀) v]
///  section4: (K - k²M) p = -[ same ]
enum class AdjointConvention { Section3, Section4 };

std::string to_string(AdjointConvention c);
AdjointConvention adjoint_convention_from_string(const std::string& name);

struct ProblemData {
  double k2 = 1.0;
  ScalarData f = ScalarData::constant(0.0);
  VectorData A = VectorData::constant(Vec2::Zero());
  ScalarData eta0 = ScalarData::constant(0.0);
  double gamma = 1.0;

  void validate() const;
};

struct SolverOptions {
  /// Relative distance |k² - λ| / max(|λ|, 1) below which solves are refused.
  double resonance_threshold = 1e-6;
  double residual_tol = 1e-8;
  int inverse_iterations = 12;
  unsigned seed = 20240917u;
};

struct SolveReport {
  Field solution;
  double residual = 0.0;
  double resonance_margin = 0.0;
  double nearest_eigenvalue = 0.0;
  /// solve_perturbed_source only: ‖η_ε − η‖_{H¹}.
  std::optional<double> h1_change;
};

/// Factorized operator K − k²M with the essential conditions of a variant.
/// Construction computes the resonance margin by inverse iteration on the
/// same factorization and throws ResonanceError below the threshold.
class HelmholtzSystem {
 public:
  HelmholtzSystem(const Mesh& mesh, double k2, BcVariant variant, const SolverOptions& options = {});

  /// Solves with homogeneous essential values for a full-length load vector.
  Vector solve(const Vector& load) const;
  /// Relative algebraic residual of the last solve.
  double last_residual() const { return last_residual_; }

  const Mesh& mesh() const { return *mesh_; }
  double k2() const { return k2_; }
  BcVariant variant() const { return variant_; }
  const SparseMatrix& stiffness() const { return k_; }
  const SparseMatrix& mass() const { return m_; }
  const ReducedSystem& reduced() const { return sys_; }
  double resonance_margin() const { return margin_; }
  double nearest_eigenvalue() const { return nearest_; }

 private:
  const Mesh* mesh_;
  double k2_;
  BcVariant variant_;
  SolverOptions options_;
  SparseMatrix k_, m_;
  ReducedSystem sys_;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
  double margin_ = 0.0;
  double nearest_ = 0.0;
  mutable double last_residual_ = 0.0;
};

/// Load vector of f (edge-midpoint rule).
Vector state_load(const Mesh& mesh, const ProblemData& data);

/// 2[(Kη − ∫A·∇φ) + (Mη − ∫η₀φ)], the derivative of J with respect to η.
Vector adjoint_load(const Mesh& mesh, const ProblemData& data, const Vector& state, const SparseMatrix& k,
                    const SparseMatrix& m);

SolveReport solve_state(const Mesh& mesh, const ProblemData& data, BcVariant variant,
                        const SolverOptions& options = {});
SolveReport solve_state(const HelmholtzSystem& system, const ProblemData& data);

SolveReport solve_adjoint(const Mesh& mesh, const ProblemData& data, const Vector& state, BcVariant variant,
                          AdjointConvention convention, const SolverOptions& options = {});
SolveReport solve_adjoint(const HelmholtzSystem& system, const ProblemData& data, const Vector& state,
                          AdjointConvention convention);

/// Triangles whose centroid lies in the open disk of the hole.
std::vector<char> hole_element_mask(const Mesh& mesh, const HoleSpec& hole);

/// State with the source multiplied by γ inside the hole disk (same mesh).
/// Requires the local mesh size to be at most ε/4.
SolveReport solve_perturbed_source(const Mesh& mesh, const ProblemData& data, const HoleSpec& hole,
                                   BcVariant variant = BcVariant::Dirichlet, const SolverOptions& options = {});
SolveReport solve_perturbed_source(const HelmholtzSystem& system, const ProblemData& data, const HoleSpec& hole);

/// Solves (K − λM) p = rhs on the essential-condition space of `variant`
/// when λ is a simple eigenvalue with eigenfunction η, via the bordered
/// system [[K − λM, Mη], [ηᵀM, 0]]; the result is M-orthogonal to η.
Vector solve_bordered(const Mesh& mesh, double lambda, const Vector& eigenfunction, BcVariant variant,
                      const Vector& rhs);

}  // namespace helmopt
