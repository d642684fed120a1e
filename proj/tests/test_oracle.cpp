#include "helmopt/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace helmopt;

TEST_CASE("analytic square and disk eigenvalues") {
  const auto sq = oracle::analytic_eigs(oracle::Domain::UnitSquare, BcVariant::Dirichlet, 3);
  const double pi2 = kPi * kPi;
  CHECK(sq[0].lambda == doctest::Approx(2 * pi2).epsilon(1e-14));
  CHECK(sq[1].lambda == doctest::Approx(5 * pi2).epsilon(1e-14));
  CHECK(sq[2].lambda == doctest::Approx(5 * pi2).epsilon(1e-14));

  const auto disk = oracle::analytic_eigs(oracle::Domain::UnitDisk, BcVariant::Dirichlet, 1);
  CHECK(disk[0].lambda == doctest::Approx(5.78318596).epsilon(1e-8));
  CHECK(disk[0].eigenfunction(Vec2(1.0, 0.0)) == doctest::Approx(0.0).epsilon(1e-12));

  const auto neu = oracle::analytic_eigs(oracle::Domain::UnitDisk, BcVariant::Neumann, 2);
  CHECK(neu[0].lambda == 0.0);
  CHECK(neu[1].lambda == doctest::Approx(oracle::kJp11 * oracle::kJp11).epsilon(1e-14));

  CHECK_THROWS_AS(oracle::analytic_eigs(oracle::Domain::UnitSquare, BcVariant::Obstacle, 1), InvalidArgument);
}

TEST_CASE("Bessel zeros against the standard library") {
  CHECK(std::abs(std::cyl_bessel_j(0.0, oracle::kJ01)) < 1e-14);
  CHECK(std::abs(std::cyl_bessel_j(1.0, oracle::kJ11)) < 1e-14);
  CHECK(std::abs(std::cyl_bessel_j(2.0, oracle::kJ21)) < 1e-14);
  CHECK(std::abs(std::cyl_bessel_j(0.0, oracle::kJ02)) < 1e-14);
  // J1' = J0 - J1/x
  const double x = oracle::kJp11;
  CHECK(std::abs(std::cyl_bessel_j(0.0, x) - std::cyl_bessel_j(1.0, x) / x) < 1e-14);
}

TEST_CASE("fits") {
  std::vector<std::pair<double, double>> s{{0.1, 3e-2}, {0.05, 7.5e-3}, {0.025, 1.875e-3}};
  const auto fit = oracle::fit_rate(s);
  CHECK(fit.fitted_rate == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(oracle::fit_rate({{0.1, 1.0}, {0.2, 1.0}, {0.3, 1.0}}), FitError);

  const auto lf = oracle::linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(lf.slope == doctest::Approx(2.0));
  CHECK(lf.intercept == doctest::Approx(1.0));
  CHECK_THROWS_AS(oracle::linear_fit({1, 1}, {0, 1}), FitError);
}

TEST_CASE("manufactured data satisfy the equation") {
  const oracle::Manufactured mf{1.0};
  const Vec2 x(0.3, 0.7);
  const double lap = -2 * kPi * kPi * mf.u(x);
  CHECK(-lap - mf.k2 * mf.u(x) == doctest::Approx(mf.f(x)).epsilon(1e-14));
  CHECK(mf.u(Vec2(0.0, 0.4)) == doctest::Approx(0.0));
}
