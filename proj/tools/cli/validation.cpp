#include "validation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace helmopt::cli {

namespace {

double rel(double value, double reference) {
  return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
}

ValidationRow row(std::string name, std::string formula, std::string kind, double value, double reference,
                  double tol, bool asserted = true) {
  ValidationRow r;
  r.name = std::move(name);
  r.formula = std::move(formula);
  r.reference_kind = std::move(kind);
  r.value = value;
  r.reference = reference;
  r.rel_error = rel(value, reference);
  r.tolerance = tol;
  r.asserted = asserted;
  r.pass = !asserted || r.rel_error <= tol;
  return r;
}

VelocityField radial_obstacle_field(const Mesh& mesh, const Vec2& center) {
  std::vector<Vec2> values(static_cast<std::size_t>(mesh.num_nodes()), Vec2::Zero());
  std::vector<char> fixed(values.size(), 0);
  for (Index i = 0; i < mesh.num_nodes(); ++i) {
    const auto tag = mesh.node_tag(i);
    if (!tag) continue;
    fixed[i] = 1;
    if (*tag == BoundaryTag::Obstacle) values[i] = (mesh.node(i) - center).normalized();
  }
  return VelocityField::nodal(harmonic_extension(mesh, values, fixed), "radial");
}

}  // namespace

std::vector<ValidationRow> run_validation(const Json& config) {
  const Json& v = config.at("validate");
  const Json& tol = v.at("tolerances");
  const double h = v.at("h").get<double>();
  const auto steps = v.at("fd_steps").get<std::vector<double>>();
  std::vector<ValidationRow> rows;

  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, h);
  ProblemData base;
  base.k2 = 1.0;
  base.f = ScalarData::constant(1.0);
  const VelocityField dilate = VelocityField::dilation();

  {
    const double adj = dj_dirichlet(disk, base, dilate).dj;
    const double fd = fd_shape_derivative(disk, base, dilate, steps, BcVariant::Dirichlet).derivative;
    rows.push_back(row("dirichlet_shape", "Dirichlet state, Hadamard density", "fd", adj, fd,
                       tol.at("dirichlet").get<double>()));
  }
  {
    ProblemData d = base;
    d.f = ScalarData::analytic([](const Vec2& x) { return 1.0 + x.x() + 0.5 * x.y() * x.y(); });
    const double adj = dj_neumann(disk, d, dilate).dj;
    const double fd = fd_shape_derivative(disk, d, dilate, steps, BcVariant::Neumann).derivative;
    rows.push_back(row("neumann_shape", "Neumann state, boundary form with second normal derivative", "fd", adj, fd,
                       tol.at("neumann").get<double>()));
  }
  {
    const Mesh annulus = generate_annulus(ShapeSpec::disk(Vec2::Zero(), 1.0), ShapeSpec::disk(Vec2::Zero(), 0.3), h);
    const VelocityField radial = radial_obstacle_field(annulus, Vec2::Zero());
    const double adj = dj_obstacle(annulus, base, radial).dj;
    const double fd = fd_shape_derivative(annulus, base, radial, steps, BcVariant::Obstacle).derivative;
    rows.push_back(row("obstacle_shape", "obstacle, natural condition on the structure", "fd", adj, fd,
                       tol.at("obstacle").get<double>()));

    const EigenPair pair = solve_eigs(annulus, BcVariant::Obstacle, 1).front();
    const auto r = dj_obstacle(annulus, base, radial, ObstacleMode::SimpleEig, &pair);
    const double fd_eig = fd_eigen_functional(annulus, pair, base, radial, steps, BcVariant::Obstacle).derivative;
    rows.push_back(row("obstacle_eigen_functional", "obstacle eigenfunction functional, adjoint as stated", "fd",
                       r.dj, fd_eig, 0.0, false));
  }

  const auto dir = solve_eigs(disk, BcVariant::Dirichlet, 1);
  {
    const Mesh fine = generate_disk(Vec2::Zero(), 1.0, v.at("eig_h").get<double>());
    const auto fine_pair = solve_eigs(fine, BcVariant::Dirichlet, 1).front();
    const double d = simple_eig_derivative(fine, fine_pair, dilate, BcVariant::Dirichlet);
    rows.push_back(row("eig_dilation_dirichlet", "simple Dirichlet eigenvalue, dilation", "discrete-identity", d,
                       -2.0 * fine_pair.lambda, tol.at("eig_dilation").get<double>()));
  }
  {
    const double t = simple_eig_derivative(disk, dir[0], VelocityField::translation({1.0, 0.0}), BcVariant::Dirichlet);
    ValidationRow tr = row("eig_translation_dirichlet", "simple Dirichlet eigenvalue, translation |dλ|/λ",
                           "analytic", std::abs(t) / dir[0].lambda, 0.0, tol.at("eig_translation").get<double>());
    tr.rel_error = std::abs(t) / dir[0].lambda;
    tr.pass = tr.rel_error <= tr.tolerance;
    rows.push_back(tr);

    const double fd = fd_eigen_functional(disk, dir[0], base, dilate, steps, BcVariant::Dirichlet).derivative;
    const double adj = dj_with_eigenvalue(disk, dir[0], base, dilate, BcVariant::Dirichlet).dj;
    rows.push_back(row("eigen_functional", "Dirichlet eigenfunction functional, adjoint as stated", "fd", adj, fd,
                       0.0, false));
  }
  {
    const auto neu = solve_eigs(disk, BcVariant::Neumann, 3);
    const auto clusters = detect_multiplicity(disk, {neu[1], neu[2]});
    const auto m = multiple_eig_derivative(disk, clusters.front(), dilate, BcVariant::Neumann);
    double worst = 0.0;
    for (Index i = 0; i < m.candidates.size(); ++i) {
      worst = std::max(worst, rel(m.candidates[i], -2.0 * clusters.front().lambda_mean));
    }
    ValidationRow r = row("eig_dilation_neumann", "double Neumann eigenvalue, dilation", "discrete-identity",
                          m.candidates[0], -2.0 * clusters.front().lambda_mean, tol.at("eig_dilation").get<double>());
    r.rel_error = worst;
    r.pass = worst <= r.tolerance;
    rows.push_back(r);
  }
  {
    const Mesh square = generate_rectangle(1.0, 1.0, v.at("square_h").get<double>());
    const VelocityField stretch = VelocityField::stretch({0.5, 0.5});
    const auto pairs = solve_eigs(square, BcVariant::Dirichlet, 3);
    const auto clusters = detect_multiplicity(square, {pairs[1], pairs[2]});
    const auto m = multiple_eig_derivative(square, clusters.front(), stretch, BcVariant::Dirichlet);
    const auto fd = oracle::fd_branch_derivatives(square, BcVariant::Dirichlet, 1, 2, stretch, 1e-3);
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) worst = std::max(worst, rel(m.candidates[static_cast<Index>(i)], fd[i]));
    ValidationRow r = row("multi_eig_stretch", "double Dirichlet eigenvalue, stretch splitting", "fd",
                          m.candidates[static_cast<Index>(fd.size()) - 1], fd.back(), tol.at("multi_eig").get<double>());
    r.rel_error = worst;
    r.pass = worst <= r.tolerance;
    rows.push_back(r);

    std::mt19937 rng(7u);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    const double a = angle(rng);
    EigenCluster rotated = clusters.front();
    const Vector& e0 = clusters.front().pairs[0].eigenfunction.values;
    const Vector& e1 = clusters.front().pairs[1].eigenfunction.values;
    rotated.pairs[0].eigenfunction.values = std::cos(a) * e0 + std::sin(a) * e1;
    rotated.pairs[1].eigenfunction.values = -std::sin(a) * e0 + std::cos(a) * e1;
    const auto mr = multiple_eig_derivative(square, rotated, stretch, BcVariant::Dirichlet);
    const double scale = m.candidates.cwiseAbs().maxCoeff();
    const double gap = (mr.candidates - m.candidates).cwiseAbs().maxCoeff() / scale;
    ValidationRow rb = row("multi_eig_rebasis", "matrix spectrum under orthogonal re-basis", "discrete-identity",
                           gap, 0.0, tol.at("multi_eig_rebasis").get<double>());
    rb.rel_error = gap;
    rb.pass = gap <= rb.tolerance;
    rows.push_back(rb);
  }
  {
    ProblemData d = base;
    d.gamma = 0.5;
    const Vec2 c{0.2, 0.1};
    const double eps = std::max(0.3, 4.0 * local_mesh_size(disk, c, 0.5));
    const auto id = source_identity(disk, d, HoleSpec{c, eps});
    ValidationRow r = row("source_identity", "source perturbation, discrete adjoint identity", "discrete-identity",
                          id.lhs, id.rhs, tol.at("source_identity").get<double>());
    r.rel_error = id.relative_gap;
    r.pass = r.rel_error <= r.tolerance;
    rows.push_back(r);
  }
  {
    const double eps = std::max(0.2, 4.0 * h);
    const auto dt = topo_hole_derivative(disk, dir[0], base, Vec2::Zero());
    const auto q = topo_quotient(disk, base, Vec2::Zero(), {eps}, TopoMode::HoleDirichlet);
    rows.push_back(row("hole_topological", "Dirichlet hole in the eigenvalue problem, value at the center",
                       "fd", dt.dt, q.rows.front().quotient, 0.0, false));
  }
  return rows;
}

Json to_json(const ValidationRow& r) {
  return Json{{"name", r.name},           {"formula", r.formula},     {"reference_kind", r.reference_kind},
              {"value", r.value},         {"reference", r.reference}, {"rel_error", r.rel_error},
              {"tolerance", r.tolerance}, {"asserted", r.asserted},   {"pass", r.pass}};
}

}  // namespace helmopt::cli
