#include "helmopt/oracle.hpp"
#include "helmopt/spectral.hpp"

#include <doctest.h>

#include <cmath>

using namespace helmopt;

TEST_CASE("unit square spectrum") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 1.0 / 32);
  const auto pairs = solve_eigs(sq, BcVariant::Dirichlet, 4);
  CHECK(std::abs(pairs[0].lambda - 2 * kPi * kPi) / (2 * kPi * kPi) < 0.02);
  CHECK(std::abs(pairs[1].lambda - pairs[2].lambda) / pairs[1].lambda < 0.005);

  const SparseMatrix m = assemble_mass(sq);
  for (const auto& p : pairs) {
    CHECK(p.eigenfunction.values.dot(m * p.eigenfunction.values) == doctest::Approx(1.0).epsilon(1e-10));
  }

  const auto clusters = detect_multiplicity(sq, pairs);
  REQUIRE(clusters.size() >= 2);
  CHECK(clusters[0].multiplicity == 1);
  CHECK(clusters[1].multiplicity == 2);
}

TEST_CASE("Neumann kernel is the constants") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.1);
  const auto pairs = solve_eigs(sq, BcVariant::Neumann, 2);
  CHECK(std::abs(pairs[0].lambda) < 1e-8);
  const Vector& u = pairs[0].eigenfunction.values;
  CHECK((u.maxCoeff() - u.minCoeff()) / u.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("disk Bessel modes J1 are degenerate") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.1);
  const auto clusters = detect_multiplicity(disk, solve_eigs(disk, BcVariant::Dirichlet, 3));
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].multiplicity == 1);
  CHECK(clusters[1].multiplicity == 2);
}

TEST_CASE("simple eigenvalue derivatives") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.05);
  const auto pairs = solve_eigs(disk, BcVariant::Dirichlet, 3);
  const double lambda = pairs[0].lambda;
  CHECK(std::abs(simple_eig_derivative(disk, pairs[0], VelocityField::translation({1, 0}), BcVariant::Dirichlet)) <=
        1e-2 * lambda);
  CHECK(simple_eig_derivative(disk, pairs[0], VelocityField::zero(), BcVariant::Dirichlet) == 0.0);

  const auto clusters = detect_multiplicity(disk, pairs);
  CHECK_THROWS_AS(
      simple_eig_derivative(disk, pairs[1], VelocityField::dilation(), BcVariant::Dirichlet, &clusters[1]),
      MultiplicityError);

  EigenPair scaled = pairs[0];
  scaled.eigenfunction.values *= 2.0;
  CHECK_THROWS_AS(simple_eig_derivative(disk, scaled, VelocityField::dilation(), BcVariant::Dirichlet),
                  PreconditionError);
}

TEST_CASE("multiple eigenvalue derivative") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 1.0 / 32);
  const auto clusters = detect_multiplicity(sq, solve_eigs(sq, BcVariant::Dirichlet, 3));
  REQUIRE(clusters.size() == 2);
  const auto& cl = clusters[1];

  const auto zero = multiple_eig_derivative(sq, cl, VelocityField::zero(), BcVariant::Dirichlet);
  CHECK(zero.matrix.cwiseAbs().maxCoeff() == 0.0);

  const auto dil = multiple_eig_derivative(sq, cl, VelocityField::dilation({0.5, 0.5}), BcVariant::Dirichlet);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(dil.candidates[i] + 2 * cl.lambda_mean) / (2 * cl.lambda_mean) < 0.05);
  }

  const auto st = multiple_eig_derivative(sq, cl, VelocityField::stretch({0.5, 0.5}), BcVariant::Dirichlet);
  CHECK(st.candidates[0] < 0.0);
  CHECK(st.candidates[1] > 0.0);

  EigenCluster bad = cl;
  bad.pairs[1].eigenfunction.values = bad.pairs[0].eigenfunction.values;
  CHECK_THROWS_AS(multiple_eig_derivative(sq, bad, VelocityField::stretch({0.5, 0.5}), BcVariant::Dirichlet),
                  PreconditionError);
}
