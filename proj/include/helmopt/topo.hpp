#pragma once

#include "helmopt/oracle.hpp"
#include "helmopt/shape_grad.hpp"

#include <optional>
#include <string>
#include <vector>

namespace helmopt {

/// f(ε) = coefficient · ε^power.
struct ScaleFunction {
  std::string name;
  double coefficient = 1.0;
  double power = 2.0;

  double operator()(double eps) const;
};

struct TopoField {
  Field values;
  ScaleFunction scale;
  AdjointConvention convention = AdjointConvention::Section4;
};

/// D_T(x) = (1 − γ) f(x) p(x) with the section4 adjoint; scale πε².
TopoField topo_source_field(const Mesh& mesh, const ProblemData& data, BcVariant variant = BcVariant::Dirichlet,
                            const SolverOptions& options = {});

enum class TopoMode { Source, HoleDirichlet };

struct QuotientRow {
  double eps = 0.0;
  double j_eps = 0.0;
  double delta_j = 0.0;
  double scale = 0.0;
  double quotient = 0.0;
};

struct QuotientTable {
  TopoMode mode = TopoMode::Source;
  double j_base = 0.0;
  std::vector<QuotientRow> rows;  // ε descending
  double limit = 0.0;             // Richardson with assumed remainder order 1
  std::optional<double> observed_order;
  oracle::LinearFit fit_eps2;     // δJ against ε²
};

/// Difference quotients (ψ(χ_ε) − ψ(χ)) / f(ε).
///  Source: same mesh, source multiplied by γ inside the disk; f = πε².
///  HoleDirichlet: first Dirichlet eigenfunction on the punched mesh
///  against the unperturbed one; f = ε² (mes(ω) stays in D_T).
QuotientTable topo_quotient(const Mesh& mesh, const ProblemData& data, const Vec2& x0, const std::vector<double>& eps,
                            TopoMode mode, const HoleSpec& reference = {}, BcVariant variant = BcVariant::Dirichlet,
                            const SolverOptions& options = {});

/// Discrete chain behind the source expansion:
/// ψ(χ_ε) − ψ(χ) − (δᵀKδ + δᵀMδ) = (1 − γ) pᵀF_ω with δ = η_ε − η.
struct SourceIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
  double relative_gap = 0.0;
};
SourceIdentity source_identity(const Mesh& mesh, const ProblemData& data, const HoleSpec& hole,
                               BcVariant variant = BcVariant::Dirichlet, const SolverOptions& options = {});

/// Adjoint of the hole case, −(K − λM) p = 2(∇η − A, ∇·) + 2(η − η₀, ·),
/// solved through the bordered system.
Vector hole_adjoint(const Mesh& mesh, const EigenPair& pair, const ProblemData& data);

struct HoleTopoValue {
  Vec2 x0 = Vec2::Zero();
  double dt = 0.0;
  double eta = 0.0;
  double p = 0.0;
  Vec2 grad_eta = Vec2::Zero();
  Vec2 grad_p = Vec2::Zero();
};

/// DT(x₀) = mes(ω)(∇η·∇p − λη p − |∇η − A|² − (η − η₀)²) at each point.
/// Points closer than 2h to the boundary are rejected.
std::vector<HoleTopoValue> topo_hole_derivative(const Mesh& mesh, const EigenPair& pair, const ProblemData& data,
                                                const std::vector<Vec2>& points, const HoleSpec& reference = {},
                                                const EigenCluster* cluster = nullptr);
HoleTopoValue topo_hole_derivative(const Mesh& mesh, const EigenPair& pair, const ProblemData& data, const Vec2& x0,
                                   const HoleSpec& reference = {});

struct HoleSweepRow {
  double eps = 0.0;
  double lambda_eps = 0.0;
  double delta = 0.0;
  double predicted = 0.0;
  double h1_change = 0.0;
};

struct EigHoleExpansion {
  double lambda0 = 0.0;
  double first_order_coeff = 0.0;      // 4π η(x₀)² cap(ω)
  double first_order_coeff_linear = 0.0;  // 4π η(x₀) cap(ω)
  int remainder_order = 2;
  std::vector<HoleSweepRow> rows;      // ε descending
  std::optional<oracle::LinearFit> fit_eps;
  std::optional<oracle::LinearFit> fit_inv_log;

  double predicted(double eps) const { return lambda0 + eps * first_order_coeff; }
};

EigHoleExpansion eig_hole_expansion(const Mesh& mesh, const EigenPair& pair, const Vec2& x0, const HoleSpec& hole,
                                    const std::vector<double>& eps = {});

/// Values of a field on the nodes of a punched mesh: copied for surviving
/// nodes, interpolated on the old mesh for nodes created by the remeshing.
Vector transfer_to_punched(const Mesh& original, const PunchedMesh& punched, const Vector& values);

}  // namespace helmopt
