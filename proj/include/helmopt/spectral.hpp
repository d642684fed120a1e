#pragma once

#include "helmopt/helmholtz.hpp"

#include <Eigen/Dense>

#include <vector>

namespace helmopt {

struct EigenPair {
  double lambda = 0.0;
  Field eigenfunction;  // ηᵀMη = 1, largest-magnitude entry positive
  int index = 0;        // rank in ascending order, from 0
  double residual = 0.0;
};

struct EigenCluster {
  std::vector<EigenPair> pairs;
  int multiplicity = 1;
  double lambda_mean = 0.0;
};

struct MultiEigDerivative {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd candidates;  // eigenvalues of `matrix`, ascending
};

struct EigOptions {
  int max_iters = 400;
  double tol = 1e-10;
  unsigned seed = 12345u;
  int guard_vectors = 6;
};

/// m smallest eigenpairs of Ku = λMu under the essential conditions of
/// `variant`, by shift-invert block subspace iteration with Rayleigh–Ritz.
std::vector<EigenPair> solve_eigs(const Mesh& mesh, BcVariant variant, int count, const EigOptions& options = {});

/// Greedy grouping of consecutive eigenvalues whose relative gap is below
/// `rel_tol`; each cluster basis is re-orthonormalized in the M inner product.
std::vector<EigenCluster> detect_multiplicity(const Mesh& mesh, const std::vector<EigenPair>& pairs,
                                              double rel_tol = 1e-2);

/// Normal velocity V·n at the nodes of `tag` (zero elsewhere).
Vector normal_velocity(const Mesh& mesh, BoundaryTag tag, const std::vector<Vec2>& velocity);

/// Derivative of a simple eigenvalue along V. On essential boundaries the
/// density is −(∂η/∂n)²; on natural ones it is |∇η|² − λη².
double simple_eig_derivative(const Mesh& mesh, const EigenPair& pair, const VelocityField& velocity,
                             BcVariant variant, const EigenCluster* cluster = nullptr);

/// Which form of the natural-boundary matrix entry to use.
enum class NaturalMatrixForm {
  Weighted,  // ∫(∇η_i·∇η_j − λη_iη_j) V·n
  AsStated,  // ∫∇η_i·∇η_j dσ − λ∫η_iη_j V·n (no V·n on the first integral)
};

/// p×p matrix whose eigenvalues are the directional derivatives of the
/// branches of a multiple eigenvalue. Entries sum the per-tag integrals:
/// −∫(∂η_i/∂n)(∂η_j/∂n)V·n on essential tags and the natural form on the others.
MultiEigDerivative multiple_eig_derivative(const Mesh& mesh, const EigenCluster& cluster, const VelocityField& velocity,
                                           BcVariant variant,
                                           NaturalMatrixForm form = NaturalMatrixForm::Weighted);

}  // namespace helmopt
