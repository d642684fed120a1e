#include "helmopt/helmholtz.hpp"
#include "helmopt/oracle.hpp"
#include "helmopt/spectral.hpp"

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

}  // namespace

TEST_CASE("zero source gives the zero state") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.1);
  ProblemData d;
  const auto r = solve_state(sq, d, BcVariant::Dirichlet);
  CHECK(r.solution.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("manufactured solution error shrinks at second order") {
  const oracle::Manufactured mf{1.0};
  ProblemData d;
  d.k2 = mf.k2;
  d.f = ScalarData::analytic([&](const Vec2& x) { return mf.f(x); });
  std::vector<double> errs;
  for (double h : {0.1, 0.05}) {
    const Mesh sq = generate_rectangle(1.0, 1.0, h);
    const Vector u = solve_state(sq, d, BcVariant::Dirichlet).solution.values;
    errs.push_back(l2_norm(sq, u - interpolate(sq, [&](const Vec2& x) { return mf.u(x); })));
  }
  CHECK(errs[0] / errs[1] > 3.5);
}

TEST_CASE("k2 on the discrete spectrum is refused") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.1);
  const double lambda1 = solve_eigs(sq, BcVariant::Dirichlet, 1)[0].lambda;
  try {
    HelmholtzSystem sys(sq, lambda1, BcVariant::Dirichlet);
    FAIL("expected a resonance error");
  } catch (const ResonanceError& e) {
    CHECK(e.nearest_eigenvalue() == doctest::Approx(lambda1).epsilon(1e-6));
  }
}

TEST_CASE("adjoint") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.1);
  ProblemData d = unit_source();
  const Vector eta = solve_state(disk, d, BcVariant::Dirichlet).solution.values;

  SUBCASE("targets met give a zero adjoint") {
    ProblemData met = d;
    met.A = VectorData::per_element(element_gradients(disk, eta));
    met.eta0 = ScalarData::nodal(eta);
    for (auto c : {AdjointConvention::Section3, AdjointConvention::Section4}) {
      const Vector p = solve_adjoint(disk, met, eta, BcVariant::Dirichlet, c).solution.values;
      CHECK(p.cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("the two conventions differ by sign") {
    const Vector p3 = solve_adjoint(disk, d, eta, BcVariant::Dirichlet, AdjointConvention::Section3).solution.values;
    const Vector p4 = solve_adjoint(disk, d, eta, BcVariant::Dirichlet, AdjointConvention::Section4).solution.values;
    CHECK(p3.cwiseAbs().maxCoeff() > 0.0);
    CHECK((p3 + p4).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(adjoint_convention_from_string("section5"), InvalidArgument);
}

TEST_CASE("perturbed source") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.01);
  ProblemData d = unit_source();
  const Vector eta = solve_state(sq, d, BcVariant::Dirichlet).solution.values;

  SUBCASE("gamma = 1 leaves the state unchanged") {
    const auto r = solve_perturbed_source(sq, d, {Vec2(0.5, 0.5), 0.08});
    CHECK((r.solution.values - eta).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("zero source stays zero") {
    ProblemData z;
    z.gamma = 0.3;
    const auto r = solve_perturbed_source(sq, z, {Vec2(0.5, 0.5), 0.08});
    CHECK(r.solution.values.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("H1 change decreases with the radius") {
    d.gamma = 0.5;
    std::vector<std::pair<double, double>> samples;
    for (double eps : {0.16, 0.08, 0.04}) {
      const auto r = solve_perturbed_source(sq, d, {Vec2(0.5, 0.5), eps});
      REQUIRE(r.h1_change.has_value());
      samples.push_back({eps, *r.h1_change});
    }
    CHECK(samples[1].second < samples[0].second);
    CHECK(samples[2].second < samples[1].second);
    const auto fit = oracle::fit_rate(samples);
    CHECK(fit.fitted_rate >= 1.0);
    CHECK(fit.fitted_rate <= 2.2);
  }
  SUBCASE("mesh too coarse for the hole") {
    d.gamma = 0.5;
    CHECK_THROWS_AS(solve_perturbed_source(sq, d, {Vec2(0.5, 0.5), 0.02}), ResolutionError);
  }
}

TEST_CASE("obstacle variant needs the tag") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.1);
  CHECK_THROWS_AS(solve_state(sq, unit_source(), BcVariant::Obstacle), LookupError);
}
