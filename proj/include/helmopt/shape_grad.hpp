#pragma once

#include "helmopt/spectral.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace helmopt {

struct FunctionalValue {
  double j_total = 0.0;
  double j_gradient_misfit = 0.0;  // ∫|∇η − A|²
  double j_value_misfit = 0.0;     // ∫(η − η₀)²
};

/// J = ∫|∇η − A|² + ∫(η − η₀)² with the edge-midpoint rule. With a mask only
/// the flagged triangles contribute.
FunctionalValue evaluate_J(const Mesh& mesh, const ProblemData& data, const Vector& state,
                           const std::vector<char>* mask = nullptr);

struct ShapeGradientResult {
  double dj = 0.0;
  /// Full-length nodal density g with dj = Σ_tags ∫ g V·n dσ, when the
  /// formula is of pure Hadamard form.
  std::optional<Vector> density;
  std::vector<std::pair<std::string, double>> terms;
  AdjointConvention convention = AdjointConvention::Section3;
  std::vector<std::string> warnings;

  double term(const std::string& name) const;
};

/// Σ over the mesh tags of ∫ density · V·n dσ.
double integrate_density(const Mesh& mesh, const Vector& density, const VelocityField& velocity);

/// Misfit |∇η − A|² + (η − η₀)² at the nodes of `tag` (boundary gradient of η).
Vector boundary_misfit(const Mesh& mesh, BoundaryTag tag, const ProblemData& data, const Vector& state);

/// ∂²η/∂n² at natural-boundary nodes from the trace of the PDE:
/// Δη = −k²η − f = ∂²η/∂n² + H ∂η/∂n + Δ_Γη.
Vector second_normal_derivative(const Mesh& mesh, BoundaryTag tag, double k2, const ScalarData& f,
                                const Vector& state);

/// Dirichlet state and adjoint (section3):
/// density ∂η/∂n ∂p/∂n − 2(∂η/∂n)² + |∇η − A|² + (η − η₀)² on the essential tags.
ShapeGradientResult dj_dirichlet(const Mesh& mesh, const ProblemData& data, const VelocityField& velocity,
                                 const SolverOptions& options = {});

/// Neumann state and adjoint (section3): ∫[−∂²η/∂n² V·n + ∇η·∇_Γ(V·n)] p + ∫ misfit V·n.
/// No density is returned.
ShapeGradientResult dj_neumann(const Mesh& mesh, const ProblemData& data, const VelocityField& velocity,
                               const SolverOptions& options = {});

/// Functional of a simple eigenfunction (k² = λ), with the boundary density
/// −∂η/∂n ∂p/∂n − 2(∂η/∂n)² + misfit and the adjoint carrying a natural
/// condition on every boundary.
ShapeGradientResult dj_with_eigenvalue(const Mesh& mesh, const EigenPair& pair, const ProblemData& data,
                                       const VelocityField& velocity, BcVariant variant,
                                       const EigenCluster* cluster = nullptr);

enum class ObstacleMode { Plain, SimpleEig };

/// Obstacle configuration (natural on ∂K, Dirichlet on ∂Ω).
///  Plain: ∂K carries [−∂²η/∂n² V·n + ∇η·∇_Γ(V·n)] p + misfit V·n, ∂Ω the
///  Dirichlet density; adjoint section3.
///  SimpleEig: k² is the eigenvalue of `pair` (first one when null).
ShapeGradientResult dj_obstacle(const Mesh& mesh, const ProblemData& data, const VelocityField& velocity,
                                ObstacleMode mode = ObstacleMode::Plain, const EigenPair* pair = nullptr,
                                const SolverOptions& options = {});

struct FdRow {
  double t = 0.0;
  double j_plus = 0.0;
  double j_minus = 0.0;
  double central = 0.0;
};

struct FdResult {
  std::vector<FdRow> rows;   // in the order of the t list
  double derivative = 0.0;   // Richardson value when available, else finest central difference
  double richardson = 0.0;
  std::optional<double> observed_order;
};

using MeshFunctional = std::function<double(const Mesh&)>;

/// Central differences (J(φ_t Ω) − J(φ_{−t} Ω)) / 2t on the same connectivity.
FdResult fd_derivative(const Mesh& mesh, const VelocityField& velocity, const std::vector<double>& t_list,
                       const MeshFunctional& functional);

/// J of the Helmholtz state for `variant`.
FdResult fd_shape_derivative(const Mesh& mesh, const ProblemData& data, const VelocityField& velocity,
                             const std::vector<double>& t_list, BcVariant variant, const SolverOptions& options = {});

/// Eigenbranch tracked by maximal M-overlap with `reference` (an eigenfunction
/// on a mesh with the same connectivity), sign-aligned.
EigenPair track_eigenpair(const Mesh& mesh, BcVariant variant, const Vector& reference, int search_count);

/// J of the tracked eigenfunction on deformed meshes.
FdResult fd_eigen_functional(const Mesh& mesh, const EigenPair& pair, const ProblemData& data,
                             const VelocityField& velocity, const std::vector<double>& t_list, BcVariant variant);

}  // namespace helmopt
