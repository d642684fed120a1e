#include "helmopt/shape_grad.hpp"

#include <doctest.h>

#include <cmath>

using namespace helmopt;

namespace {

ProblemData unit_source() {
  ProblemData d;
  d.k2 = 1.0;
  d.f = ScalarData::constant(1.0);
  return d;
}

Mesh centered_annulus(double h) {
  return generate_annulus(ShapeSpec::disk(Vec2::Zero(), 1.0), ShapeSpec::disk(Vec2::Zero(), 0.3), h);
}

}  // namespace

TEST_CASE("functional on trivial data") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.1);
  const Vector zero = Vector::Zero(sq.num_nodes());
  ProblemData d;
  d.eta0 = ScalarData::constant(1.0);
  CHECK(evaluate_J(sq, d, zero).j_total == doctest::Approx(1.0).epsilon(1e-12));

  ProblemData a;
  a.A = VectorData::constant(Vec2(1, 0));
  CHECK(evaluate_J(sq, a, zero).j_total == doctest::Approx(1.0).epsilon(1e-12));

  const Vector eta = interpolate(sq, [](const Vec2& x) { return x.x() * x.y(); });
  ProblemData met;
  met.A = VectorData::per_element(element_gradients(sq, eta));
  met.eta0 = ScalarData::nodal(eta);
  CHECK(evaluate_J(sq, met, eta).j_total == 0.0);
}

TEST_CASE("Dirichlet shape gradient") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.1);
  const ProblemData d = unit_source();
  CHECK(dj_dirichlet(disk, d, VelocityField::zero()).dj == 0.0);

  SUBCASE("targets met") {
    const Vector eta = solve_state(disk, d, BcVariant::Dirichlet).solution.values;
    ProblemData met = d;
    met.A = VectorData::per_element(element_gradients(disk, eta));
    met.eta0 = ScalarData::nodal(eta);
    const auto vel = VelocityField::dilation();
    const auto r = dj_dirichlet(disk, met, vel);
    CHECK(std::abs(r.term("adjoint_flux")) < 1e-12);

    const Vector dn = normal_derivative(disk, BoundaryTag::Outer, eta);
    const Vector vn = normal_velocity(disk, BoundaryTag::Outer, vel.sample(disk));
    const double expected = -2.0 * boundary_integral(disk, BoundaryTag::Outer, Vector(dn.array().square() * vn.array()));
    CHECK(r.term("state_flux") == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.dj == doctest::Approx(r.term("state_flux") + r.term("misfit")).epsilon(1e-12));
  }
  CHECK_THROWS_AS(dj_dirichlet(disk, d, VelocityField::zero()).term("nonexistent"), LookupError);
}

TEST_CASE("Neumann shape gradient under a tangential slide") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.05);
  ProblemData d = unit_source();
  d.f = ScalarData::analytic([](const Vec2& x) { return 1.0 + x.x(); });
  CHECK(dj_neumann(disk, d, VelocityField::zero()).dj == 0.0);
  const auto r = dj_neumann(disk, d, VelocityField::rotation());
  const auto dil = dj_neumann(disk, d, VelocityField::dilation());
  CHECK(std::abs(r.dj) < 1e-3 * std::abs(dil.dj));
  CHECK_FALSE(r.density.has_value());
}

TEST_CASE("eigen functional is translation invariant") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.05);
  const auto pairs = solve_eigs(disk, BcVariant::Dirichlet, 1);
  ProblemData d;
  d.k2 = pairs[0].lambda;
  CHECK(dj_with_eigenvalue(disk, pairs[0], d, VelocityField::zero(), BcVariant::Dirichlet).dj == 0.0);
  const double tr =
      dj_with_eigenvalue(disk, pairs[0], d, VelocityField::translation({1, 0}), BcVariant::Dirichlet).dj;
  const double dil = dj_with_eigenvalue(disk, pairs[0], d, VelocityField::dilation(), BcVariant::Dirichlet).dj;
  CHECK(std::abs(tr) < 1e-2 * std::abs(dil));
}

TEST_CASE("obstacle shape gradient on a concentric annulus") {
  const Mesh ann = centered_annulus(0.05);
  const ProblemData d = unit_source();
  CHECK(dj_obstacle(ann, d, VelocityField::zero()).dj == 0.0);
  const double rot = dj_obstacle(ann, d, VelocityField::rotation()).dj;
  const double dil = dj_obstacle(ann, d, VelocityField::dilation()).dj;
  CHECK(std::abs(rot) < 1e-3 * std::abs(dil));
  CHECK_THROWS_AS(dj_obstacle(generate_disk(Vec2::Zero(), 1.0, 0.1), d, VelocityField::zero()), LookupError);
}

TEST_CASE("finite-difference harness") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.1);
  const auto flat = fd_derivative(disk, VelocityField::zero(), {1e-2, 5e-3}, [](const Mesh&) { return 3.0; });
  CHECK(flat.derivative == 0.0);

  const auto area = fd_derivative(disk, VelocityField::dilation(), {1e-2, 5e-3, 2.5e-3},
                                  [](const Mesh& m) { return m.total_area(); });
  CHECK(std::abs(area.derivative - 2.0 * disk.total_area()) < 1e-10);

  const auto smooth = fd_derivative(disk, VelocityField::dilation(), {0.1, 0.05, 0.025},
                                    [](const Mesh& m) { return std::pow(m.total_area(), 1.5); });
  REQUIRE(smooth.observed_order.has_value());
  CHECK(*smooth.observed_order >= 1.8);

  CHECK_THROWS_AS(fd_derivative(disk, VelocityField::dilation(), {}, [](const Mesh&) { return 0.0; }),
                  InvalidArgument);
}
