#include "helmopt/spectral.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace helmopt {

namespace {

void fix_sign(Vector& v) {
  Index arg = 0;
  const double peak = v.cwiseAbs().maxCoeff();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= peak * (1.0 - 1e-12)) {
      arg = i;
      break;
    }
  }
  if (v[arg] < 0.0) v = -v;
}

}  // namespace

std::vector<EigenPair> solve_eigs(const Mesh& mesh, BcVariant variant, int count, const EigOptions& options) {
  if (count < 1) throw InvalidArgument("solve_eigs: count must be at least 1");
  const SparseMatrix k = assemble_stiffness(mesh);
  const SparseMatrix m = assemble_mass(mesh);
  const auto ess = dirichlet_tags(mesh, variant);
  const EssentialBC bc = dirichlet_bc(mesh, ess);
  const ReducedSystem ksys = reduce_pattern(k, bc);
  const SparseMatrix& kr = ksys.matrix;
  const SparseMatrix mr = reduce_pattern(m, bc).matrix;
  const Index n = static_cast<Index>(ksys.free_dofs.size());
  if (count >= n) throw InvalidArgument("solve_eigs: count must be well below the number of free nodes");

  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  const int block = std::min<int>(count + options.guard_vectors, static_cast<int>(n));
  if (n <= 300 || 2 * block >= n) {
    const Eigen::MatrixXd kd(kr), md(mr);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense(kd, md);
    if (dense.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
    values = dense.eigenvalues().head(count);
    vectors = dense.eigenvectors().leftCols(count);
  } else {
    // shift-invert block subspace iteration; the Neumann shift keeps K − σM definite
    const double sigma = ess.empty() ? -1.0 / mesh.total_area() : 0.0;
    Eigen::SimplicialLDLT<SparseMatrix> solver(SparseMatrix(kr - sigma * mr));
    if (solver.info() != Eigen::Success) throw SolverError("eigensolver factorization failed");
    std::mt19937 rng(options.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::MatrixXd x(n, block);
    for (Index j = 0; j < block; ++j) {
      for (Index i = 0; i < n; ++i) x(i, j) = uni(rng);
    }
    double worst = 0.0;
    bool converged = false;
    for (int it = 0; it < options.max_iters; ++it) {
      Eigen::MatrixXd y = solver.solve(mr * x);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
      const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
      const Eigen::MatrixXd ks = q.transpose() * (kr * q);
      const Eigen::MatrixXd ms = q.transpose() * (mr * q);
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> rr(0.5 * (ks + ks.transpose()),
                                                                   0.5 * (ms + ms.transpose()));
      if (rr.info() != Eigen::Success) throw SolverError("Rayleigh-Ritz step failed");
      x = q * rr.eigenvectors();
      values = rr.eigenvalues();
      worst = 0.0;
      for (int j = 0; j < count; ++j) {
        const Vector xj = x.col(j);
        const Vector mx = mr * xj;
        const double res = (kr * xj - values[j] * mx).norm() / (mx.norm() * std::max(1.0, std::abs(values[j])));
        worst = std::max(worst, res);
      }
      if (worst <= options.tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "eigensolver did not converge in " << options.max_iters << " iterations (residual " << worst << ")";
      throw SolverError(os.str());
    }
    values = values.head(count).eval();
    vectors = x.leftCols(count);
  }

  std::vector<EigenPair> out;
  for (int j = 0; j < count; ++j) {
    Vector v = vectors.col(j);
    v /= std::sqrt(v.dot(mr * v));
    const Vector mx = mr * v;
    EigenPair pair;
    pair.lambda = values[j];
    pair.index = j;
    pair.residual = (kr * v - values[j] * mx).norm() / (mx.norm() * std::max(1.0, std::abs(values[j])));
    Vector full = ksys.expand(v);
    fix_sign(full);
    pair.eigenfunction = Field(std::move(full), "eig" + std::to_string(j));
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<EigenCluster> detect_multiplicity(const Mesh& mesh, const std::vector<EigenPair>& pairs, double rel_tol) {
  const SparseMatrix m = assemble_mass(mesh);
  std::vector<EigenCluster> clusters;
  for (std::size_t i = 0; i < pairs.size();) {
    std::size_t j = i + 1;
    while (j < pairs.size()) {
      const double a = pairs[j - 1].lambda;
      const double b = pairs[j].lambda;
      if (std::abs(b - a) > rel_tol * std::max(std::abs(a), std::abs(b))) break;
      ++j;
    }
    EigenCluster c;
    for (std::size_t k = i; k < j; ++k) c.pairs.push_back(pairs[k]);
    c.multiplicity = static_cast<int>(c.pairs.size());
    double mean = 0.0;
    for (const auto& p : c.pairs) mean += p.lambda;
    c.lambda_mean = mean / c.multiplicity;
    // modified Gram–Schmidt in the M inner product
    for (std::size_t a = 0; a < c.pairs.size(); ++a) {
      Vector& va = c.pairs[a].eigenfunction.values;
      for (std::size_t b = 0; b < a; ++b) {
        const Vector& vb = c.pairs[b].eigenfunction.values;
        va -= vb.dot(m * va) * vb;
      }
      va /= std::sqrt(va.dot(m * va));
    }
    clusters.push_back(std::move(c));
    i = j;
  }
  return clusters;
}

Vector normal_velocity(const Mesh& mesh, BoundaryTag tag, const std::vector<Vec2>& velocity) {
  Vector vn = Vector::Zero(mesh.num_nodes());
  for (const auto& lg : boundary_geometry(mesh, tag).loops) {
    for (std::size_t i = 0; i < lg.loop.nodes.size(); ++i) {
      const Index v = lg.loop.nodes[i];
      vn[v] = velocity[v].dot(lg.node_normal[i]);
    }
  }
  return vn;
}

namespace {

void check_normalized(const SparseMatrix& m, const Vector& v) {
  const double norm = v.dot(m * v);
  if (std::abs(norm - 1.0) > 1e-8) {
    std::ostringstream os;
    os << "eigenfunction is not M-normalized (ηᵀMη = " << norm << ")";
    throw PreconditionError(os.str());
  }
}

}  // namespace

double simple_eig_derivative(const Mesh& mesh, const EigenPair& pair, const VelocityField& velocity, BcVariant variant,
                             const EigenCluster* cluster) {
  if (cluster && cluster->multiplicity > 1) {
    throw MultiplicityError("eigenvalue " + std::to_string(pair.lambda) + " has multiplicity " +
                            std::to_string(cluster->multiplicity) + "; use multiple_eig_derivative");
  }
  const Vector& eta = pair.eigenfunction.values;
  check_normalized(assemble_mass(mesh), eta);
  const auto vel = velocity.sample(mesh);
  double total = 0.0;
  for (BoundaryTag tag : dirichlet_tags(mesh, variant)) {
    const Vector vn = normal_velocity(mesh, tag, vel);
    const Vector dn = normal_derivative(mesh, tag, eta);
    total += boundary_integral(mesh, tag, Vector(-dn.array().square() * vn.array()));
  }
  for (BoundaryTag tag : natural_tags(mesh, variant)) {
    const Vector vn = normal_velocity(mesh, tag, vel);
    const auto grad = boundary_gradient(mesh, tag, eta);
    Vector density = Vector::Zero(mesh.num_nodes());
    for (Index i : boundary_nodes(mesh, tag)) {
      density[i] = (grad[i].squaredNorm() - pair.lambda * eta[i] * eta[i]) * vn[i];
    }
    total += boundary_integral(mesh, tag, density);
  }
  return total;
}

MultiEigDerivative multiple_eig_derivative(const Mesh& mesh, const EigenCluster& cluster, const VelocityField& velocity,
                                           BcVariant variant, NaturalMatrixForm form) {
  const int p = static_cast<int>(cluster.pairs.size());
  if (p < 2) throw PreconditionError("multiple_eig_derivative needs a cluster of multiplicity at least 2");
  const SparseMatrix m = assemble_mass(mesh);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      const double g = cluster.pairs[i].eigenfunction.values.dot(m * cluster.pairs[j].eigenfunction.values);
      if (std::abs(g - (i == j ? 1.0 : 0.0)) > 1e-8) {
        throw PreconditionError("cluster basis is not M-orthonormal");
      }
    }
  }
  const double lambda = cluster.lambda_mean;
  const auto vel = velocity.sample(mesh);
  Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(p, p);

  for (BoundaryTag tag : dirichlet_tags(mesh, variant)) {
    const Vector vn = normal_velocity(mesh, tag, vel);
    std::vector<Vector> dn;
    for (const auto& pr : cluster.pairs) dn.push_back(normal_derivative(mesh, tag, pr.eigenfunction.values));
    for (int i = 0; i < p; ++i) {
      for (int j = i; j < p; ++j) {
        mat(i, j) -= boundary_integral(mesh, tag, Vector(dn[i].array() * dn[j].array() * vn.array()));
      }
    }
  }
  for (BoundaryTag tag : natural_tags(mesh, variant)) {
    const Vector vn = normal_velocity(mesh, tag, vel);
    const auto nodes = boundary_nodes(mesh, tag);
    std::vector<std::vector<Vec2>> grad;
    for (const auto& pr : cluster.pairs) grad.push_back(boundary_gradient(mesh, tag, pr.eigenfunction.values));
    for (int i = 0; i < p; ++i) {
      const Vector& ei = cluster.pairs[i].eigenfunction.values;
      for (int j = i; j < p; ++j) {
        const Vector& ej = cluster.pairs[j].eigenfunction.values;
        Vector density = Vector::Zero(mesh.num_nodes());
        for (Index v : nodes) {
          const double gg = grad[i][v].dot(grad[j][v]);
          const double weight = form == NaturalMatrixForm::Weighted ? vn[v] : 1.0;
          density[v] = gg * weight - lambda * ei[v] * ej[v] * vn[v];
        }
        mat(i, j) += boundary_integral(mesh, tag, density);
      }
    }
  }
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < i; ++j) mat(i, j) = mat(j, i);
  }
  MultiEigDerivative out;
  out.matrix = mat;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat, Eigen::EigenvaluesOnly);
  out.candidates = es.eigenvalues();
  return out;
}

}  // namespace helmopt
