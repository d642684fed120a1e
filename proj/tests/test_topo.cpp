#include "helmopt/topo.hpp"

#include <doctest.h>

#include <cmath>

using namespace helmopt;

namespace {

ProblemData source_problem(double gamma) {
  ProblemData d;
  d.k2 = 1.0;
  d.f = ScalarData::constant(1.0);
  d.gamma = gamma;
  return d;
}

}  // namespace

TEST_CASE("source field vanishes without contrast or source") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.05);
  CHECK(topo_source_field(sq, source_problem(1.0)).values.values.cwiseAbs().maxCoeff() == 0.0);
  ProblemData none;
  none.gamma = 0.5;
  CHECK(topo_source_field(sq, none).values.values.cwiseAbs().maxCoeff() == 0.0);
  const auto f = topo_source_field(sq, source_problem(0.5));
  CHECK(f.scale(0.1) == doctest::Approx(kPi * 0.01));
}

TEST_CASE("source quotients with gamma = 1 are zero") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.01);
  const auto table = topo_quotient(sq, source_problem(1.0), {0.5, 0.5}, {0.08, 0.04}, TopoMode::Source);
  for (const auto& row : table.rows) CHECK(std::abs(row.quotient) < 1e-12);
}

TEST_CASE("source identity holds to round-off") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.02);
  const auto id = source_identity(sq, source_problem(0.3), {Vec2(0.4, 0.55), 0.1});
  CHECK(id.relative_gap < 1e-10);
}

TEST_CASE("hole derivative") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.05);
  const auto pairs = solve_eigs(disk, BcVariant::Dirichlet, 3);
  ProblemData d;
  d.k2 = pairs[0].lambda;

  SUBCASE("targets met give zero everywhere") {
    const Vector& eta = pairs[0].eigenfunction.values;
    ProblemData met = d;
    met.A = VectorData::per_element(element_gradients(disk, eta));
    met.eta0 = ScalarData::nodal(eta);
    for (const auto& v : topo_hole_derivative(disk, pairs[0], met, std::vector<Vec2>{Vec2(0.1, 0.2), Vec2(-0.4, 0.3)})) {
      CHECK(std::abs(v.dt) < 1e-10);
    }
  }
  SUBCASE("query too close to the boundary") {
    try {
      topo_hole_derivative(disk, pairs[0], d, Vec2(0.97, 0.0));
      FAIL("expected an evaluation error");
    } catch (const EvaluationError& e) {
      CHECK(std::string(e.what()) == "query point within 2h of boundary");
    }
  }
  SUBCASE("multiple eigenvalue") {
    const auto clusters = detect_multiplicity(disk, pairs);
    CHECK_THROWS_AS(topo_hole_derivative(disk, pairs[1], d, std::vector<Vec2>{Vec2(0.1, 0.1)}, {}, &clusters[1]), MultiplicityError);
  }
  SUBCASE("symmetric points give equal quotients") {
    const auto a = topo_quotient(disk, d, {0.3, 0.0}, {0.1}, TopoMode::HoleDirichlet);
    const auto b = topo_quotient(disk, d, {-0.3, 0.0}, {0.1}, TopoMode::HoleDirichlet);
    CHECK(std::abs(a.rows[0].quotient - b.rows[0].quotient) / std::abs(a.rows[0].quotient) < 0.02);
  }
}

TEST_CASE("eigenvalue expansion around a hole") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.05);
  const auto pair = solve_eigs(disk, BcVariant::Dirichlet, 1)[0];
  const auto one = eig_hole_expansion(disk, pair, Vec2::Zero(), {Vec2::Zero(), 0.0, 1.0});
  const auto two = eig_hole_expansion(disk, pair, Vec2::Zero(), {Vec2::Zero(), 0.0, 2.0});
  CHECK(two.first_order_coeff == 2.0 * one.first_order_coeff);

  // second mode of the 2x1 rectangle vanishes on the line x = 1
  const Mesh rect = generate_rectangle(2.0, 1.0, 0.025);
  const auto modes = solve_eigs(rect, BcVariant::Dirichlet, 2);
  const auto nodal = eig_hole_expansion(rect, modes[1], Vec2(1.0, 0.5), {}, {0.1, 0.05});
  CHECK(std::abs(nodal.first_order_coeff) < 1e-6 * modes[1].lambda);
  REQUIRE(nodal.rows.size() == 2);
  const double slope = std::log(nodal.rows[0].delta / nodal.rows[1].delta) / std::log(2.0);
  CHECK(slope > 1.0);
}

TEST_CASE("transfer to a punched mesh keeps linear fields") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.05);
  const auto punched = punch_hole(sq, {Vec2(0.5, 0.5), 0.1});
  const ScalarFn lin = [](const Vec2& x) { return 2.0 * x.x() - x.y(); };
  const Vector moved = transfer_to_punched(sq, punched, interpolate(sq, lin));
  CHECK((moved - interpolate(punched.mesh, lin)).cwiseAbs().maxCoeff() < 1e-12);
}
