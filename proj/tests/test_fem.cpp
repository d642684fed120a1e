#include "helmopt/fem.hpp"
#include "helmopt/oracle.hpp"

#include <doctest.h>

#include <Eigen/SparseCholesky>

#include <cmath>

using namespace helmopt;

namespace {

Mesh reference_triangle() {
  return Mesh::from_triangles({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}, {Triangle{0, 1, 2}});
}

// Solves K u = b with the essential values of `bc`.
Vector solve_poisson(const Mesh& m, const Vector& load, const EssentialBC& bc) {
  const auto sys = apply_dirichlet(assemble_stiffness(m), load, bc, &m);
  if (sys.free_dofs.empty()) return sys.expand(Vector());
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys.matrix);
  return sys.expand(ldlt.solve(sys.rhs));
}

}  // namespace

TEST_CASE("element matrices on the reference triangle") {
  const Mesh m = reference_triangle();
  const Eigen::MatrixXd k(assemble_stiffness(m));
  Eigen::MatrixXd k_ref(3, 3);
  k_ref << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  CHECK((k - 0.5 * k_ref).norm() < 1e-15);

  const Eigen::MatrixXd mm(assemble_mass(m));
  Eigen::MatrixXd m_ref(3, 3);
  m_ref << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  CHECK((mm - m_ref / 24.0).norm() < 1e-15);
}

TEST_CASE("stiffness rows sum to zero") {
  const Mesh m = generate_annulus(ShapeSpec::disk(Vec2::Zero(), 1.0), ShapeSpec::disk(Vec2(0.2, 0), 0.3), 0.1);
  const Vector rows = assemble_stiffness(m) * Vector::Ones(m.num_nodes());
  CHECK(rows.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("load vectors") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.1);
  CHECK(assemble_load(sq, ScalarData::constant(1.0)).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(assemble_load(sq, ScalarData::constant(0.0)).cwiseAbs().maxCoeff() == 0.0);
  const auto fx = ScalarData::analytic([](const Vec2& x) { return x.x(); });
  CHECK(assemble_load(sq, fx).sum() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("vector load") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.1);
  CHECK(assemble_vector_load(sq, VectorData::constant(Vec2::Zero())).cwiseAbs().maxCoeff() == 0.0);

  const Vector b = assemble_vector_load(sq, VectorData::constant(Vec2(1, 0)));
  for (Index i = 0; i < sq.num_nodes(); ++i) {
    if (!sq.is_boundary_node(i)) CHECK(std::abs(b[i]) < 1e-12);
  }

  const Vector eta = interpolate(sq, [](const Vec2& x) { return std::sin(3 * x.x()) * x.y() * x.y(); });
  const Vector gb = assemble_vector_load(sq, VectorData::per_element(element_gradients(sq, eta)));
  CHECK((gb - assemble_stiffness(sq) * eta).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("essential conditions") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.1);

  SUBCASE("every node constrained") {
    EssentialBC bc;
    for (Index i = 0; i < sq.num_nodes(); ++i) bc.values.push_back({i, 0.25 * i});
    const auto sys = apply_dirichlet(assemble_stiffness(sq), Vector::Zero(sq.num_nodes()), bc);
    CHECK(sys.free_dofs.empty());
    const Vector u = sys.expand(Vector());
    for (Index i = 0; i < sq.num_nodes(); ++i) CHECK(u[i] == 0.25 * i);
  }
  SUBCASE("homogeneous boundary values are exact") {
    const auto bc = dirichlet_bc(sq, {BoundaryTag::Outer});
    const Vector u = solve_poisson(sq, assemble_load(sq, ScalarData::constant(1.0)), bc);
    for (Index i : boundary_nodes(sq, BoundaryTag::Outer)) CHECK(u[i] == 0.0);
    CHECK(u.maxCoeff() > 0.0);
  }
  SUBCASE("patch test with a linear solution") {
    const ScalarFn lin = [](const Vec2& x) { return 1.0 + 2.0 * x.x() - 3.0 * x.y(); };
    const auto bc = dirichlet_bc(sq, {BoundaryTag::Outer}, lin);
    const Vector u = solve_poisson(sq, Vector::Zero(sq.num_nodes()), bc);
    CHECK((u - interpolate(sq, lin)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("node off the boundary") {
    EssentialBC bc;
    Index interior = 0;
    while (sq.is_boundary_node(interior)) ++interior;
    bc.values.push_back({interior, 0.0});
    CHECK_THROWS_AS(apply_dirichlet(assemble_stiffness(sq), Vector::Zero(sq.num_nodes()), bc, &sq), BcError);
  }
}

TEST_CASE("boundary integrals") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.05);
  const Vector ones = Vector::Ones(disk.num_nodes());
  CHECK(std::abs(boundary_integral(disk, BoundaryTag::Outer, ones) - 2 * kPi) < 0.05 * 0.05);

  const Mesh sq = generate_rectangle(1.0, 1.0, 0.1);
  CHECK(boundary_integral(sq, BoundaryTag::Outer, Vector::Ones(sq.num_nodes())) ==
        doctest::Approx(4.0).epsilon(1e-12));

  const Vector x = interpolate(disk, [](const Vec2& p) { return p.x(); });
  CHECK(std::abs(boundary_integral(disk, BoundaryTag::Outer, x)) < 1e-12 * 2 * kPi);
  CHECK_THROWS_AS(boundary_integral(disk, BoundaryTag::Obstacle, ones), LookupError);
}

TEST_CASE("normal derivative") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.1);
  const Vector lin = interpolate(sq, [](const Vec2& x) { return 2.0 * x.x() + 0.5; });
  const Vector dn = normal_derivative(sq, BoundaryTag::Outer, lin);
  const auto g = boundary_geometry(sq, BoundaryTag::Outer);
  for (std::size_t i = 0; i < g.loops[0].loop.nodes.size(); ++i) {
    const Index v = g.loops[0].loop.nodes[i];
    CHECK(dn[v] == doctest::Approx(2.0 * g.loops[0].node_normal[i].x()).epsilon(1e-10));
  }
  CHECK(normal_derivative(sq, BoundaryTag::Outer, Vector::Constant(sq.num_nodes(), 3.0)).cwiseAbs().maxCoeff() <
        1e-12);

  // first Dirichlet mode of the unit disk, J0(j01 r)
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.05);
  const Vector u = interpolate(disk, [](const Vec2& x) { return std::cyl_bessel_j(0.0, oracle::kJ01 * x.norm()); });
  const Vector du = normal_derivative(disk, BoundaryTag::Outer, u);
  double lo = 1e300, hi = -1e300;
  for (Index v : boundary_nodes(disk, BoundaryTag::Outer)) {
    lo = std::min(lo, du[v]);
    hi = std::max(hi, du[v]);
  }
  const double exact = -oracle::kJ01 * std::cyl_bessel_j(1.0, oracle::kJ01);
  CHECK((hi - lo) / std::abs(exact) < 0.05);
  CHECK(std::abs(0.5 * (hi + lo) - exact) / std::abs(exact) < 0.1);
}

TEST_CASE("tangential gradient") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.05);
  CHECK(tangential_gradient(disk, BoundaryTag::Outer, Vector::Constant(disk.num_nodes(), 2.0))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  const Vector s = interpolate(disk, [](const Vec2& x) { return std::sin(std::atan2(x.y(), x.x())); });
  const Vector ds = tangential_gradient(disk, BoundaryTag::Outer, s);
  const auto g = boundary_geometry(disk, BoundaryTag::Outer);
  double err = 0.0, loop_sum = 0.0;
  for (std::size_t i = 0; i < g.loops[0].loop.nodes.size(); ++i) {
    const Index v = g.loops[0].loop.nodes[i];
    // counterclockwise tangent on the outer circle
    err = std::max(err, std::abs(ds[v] - std::cos(std::atan2(disk.node(v).y(), disk.node(v).x()))));
    loop_sum += ds[v] * g.loops[0].node_weight[i];
  }
  CHECK(err < 0.05 * 0.05);
  CHECK(std::abs(loop_sum) < 1e-12);
}

TEST_CASE("norms") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.1);
  CHECK(l2_norm(sq, Vector::Zero(sq.num_nodes())) == 0.0);
  CHECK(l2_norm(sq, Vector::Ones(sq.num_nodes())) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(h1_norm(sq, Vector::Ones(sq.num_nodes())) == doctest::Approx(1.0).epsilon(1e-12));

  const Mesh fine = generate_rectangle(1.0, 1.0, 0.02);
  const oracle::Manufactured mf;
  const Vector u = interpolate(fine, [&](const Vec2& x) { return mf.u(x); });
  CHECK(l2_norm(fine, u) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("harmonic extension reproduces affine fields") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.1);
  std::vector<Vec2> values(disk.num_nodes(), Vec2::Zero());
  std::vector<char> fixed(disk.num_nodes(), 0);
  for (Index v = 0; v < disk.num_nodes(); ++v) {
    if (!disk.is_boundary_node(v)) continue;
    fixed[v] = 1;
    values[v] = 2.0 * disk.node(v) + Vec2(1, 0);
  }
  const auto ext = harmonic_extension(disk, values, fixed);
  for (Index v = 0; v < disk.num_nodes(); ++v) CHECK((ext[v] - 2.0 * disk.node(v) - Vec2(1, 0)).norm() < 1e-10);

  // weighted elements only keep the boundary values and the maximum principle
  const auto stiff = harmonic_extension(disk, values, fixed, 1.0);
  for (Index v = 0; v < disk.num_nodes(); ++v) {
    if (fixed[v]) CHECK(stiff[v] == values[v]);
    CHECK(stiff[v].x() <= 3.0 + 1e-12);
    CHECK(stiff[v].x() >= -1.0 - 1e-12);
  }
}
