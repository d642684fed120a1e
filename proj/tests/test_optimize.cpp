#include "helmopt/optimize.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

using namespace helmopt;

namespace {

Mesh centered_annulus(double h) {
  return generate_annulus(ShapeSpec::disk(Vec2::Zero(), 1.0), ShapeSpec::disk(Vec2::Zero(), 0.3), h);
}

ProblemData unit_source() {
  ProblemData d;
  d.k2 = 1.0;
  d.f = ScalarData::constant(1.0);
  return d;
}

OptimizeConfig dirichlet_disk_config() {
  OptimizeConfig cfg;
  cfg.variant = BcVariant::Dirichlet;
  cfg.movable_tags = {BoundaryTag::Outer};
  return cfg;
}

}  // namespace

TEST_CASE("zero density leaves the mesh alone") {
  const Mesh ann = centered_annulus(0.1);
  const auto s = descent_step(ann, ProblemData{}, OptimizeConfig{}, 0.05);
  CHECK(s.record.accepted);
  CHECK(s.record.step == 0.0);
  for (Index i = 0; i < ann.num_nodes(); ++i) CHECK(s.mesh.node(i) == ann.node(i));
}

TEST_CASE("area projection removes a uniform density") {
  const Mesh ann = centered_annulus(0.1);
  OptimizeConfig cfg;
  cfg.area.enabled = true;
  const auto dir = descent_direction(ann, Vector::Constant(ann.num_nodes(), 0.7), cfg);
  CHECK(dir.mu == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(dir.max_speed == 0.0);
  CHECK(dir.normal_speed.cwiseAbs().maxCoeff() == 0.0);

  cfg.area.enabled = false;
  const auto raw = descent_direction(ann, Vector::Constant(ann.num_nodes(), 0.7), cfg);
  CHECK(raw.mu == 0.0);
  CHECK(raw.max_speed == doctest::Approx(0.7));
}

TEST_CASE("Neumann density from boundary bumps reproduces the shape derivative") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.1);
  ProblemData d = unit_source();
  d.f = ScalarData::analytic([](const Vec2& x) { return 1.0 + x.x(); });
  OptimizeConfig cfg;
  cfg.variant = BcVariant::Neumann;
  cfg.movable_tags = {BoundaryTag::Outer};
  const Vector g = descent_density(disk, d, cfg);
  const auto vel = VelocityField::dilation();
  const Vector vn = normal_velocity(disk, BoundaryTag::Outer, vel.sample(disk));
  const double from_density = boundary_integral(disk, BoundaryTag::Outer, Vector(g.array() * vn.array()));
  const double direct = dj_neumann(disk, d, vel).dj;
  CHECK(from_density == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("descent step decreases J") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.1);
  const auto cfg = dirichlet_disk_config();
  const ProblemData d = unit_source();
  const double j0 = evaluate_J(disk, d, solve_state(disk, d, BcVariant::Dirichlet).solution.values).j_total;
  const auto s = descent_step(disk, d, cfg, 0.05);
  CHECK(s.record.accepted);
  CHECK(s.record.j <= j0 - cfg.armijo_c * s.record.step * s.record.dj);
  CHECK(s.mesh.min_angle_deg() >= cfg.min_angle_deg);
}

TEST_CASE("topology step") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.05);
  auto cfg = dirichlet_disk_config();
  cfg.topo.enabled = true;

  SUBCASE("no admissible site") {
    ProblemData d = unit_source();
    d.gamma = 2.0;
    const TopoField field = topo_source_field(disk, d);
    CHECK(field.values.values.minCoeff() >= 0.0);
    const auto s = topology_step(disk, d, cfg, &field);
    CHECK(s.record.holes_nucleated == 0);
    CHECK_FALSE(s.record.hole_center.has_value());
    CHECK(s.mesh.num_nodes() == disk.num_nodes());
  }
  SUBCASE("synthetic spike") {
    const ProblemData d = unit_source();
    Index spike = -1;
    for (Index i = 0; i < disk.num_nodes(); ++i) {
      if ((disk.node(i) - Vec2(0.1, 0.05)).norm() < 0.05 && !disk.is_boundary_node(i)) spike = i;
    }
    REQUIRE(spike >= 0);
    TopoField field{Field(Vector::Zero(disk.num_nodes()), "spike"), ScaleFunction{"pi eps^2", kPi, 2.0}};
    field.values.values[spike] = -1.0;
    const auto s = topology_step(disk, d, cfg, &field);
    REQUIRE(s.record.hole_center.has_value());
    CHECK(*s.record.hole_center == disk.node(spike));
    CHECK(s.record.predicted_change == doctest::Approx(-kPi * std::pow(s.record.hole_radius, 2)));
    const double j0 = evaluate_J(disk, d, solve_state(disk, d, BcVariant::Dirichlet).solution.values).j_total;
    if (s.record.rolled_back) {
      CHECK(s.record.holes_nucleated == 0);
      CHECK(s.mesh.num_nodes() == disk.num_nodes());
    } else {
      CHECK(s.record.holes_nucleated == 1);
      CHECK(s.mesh.loops(BoundaryTag::Hole).size() == 1);
      const double pred = s.record.predicted_change;
      CHECK(s.record.j - j0 <= pred + 0.5 * std::abs(pred));
    }
  }
}

TEST_CASE("run stopping rules") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.1);
  const ProblemData d = unit_source();
  auto cfg = dirichlet_disk_config();

  cfg.max_iters = 0;
  auto r = run(disk, d, cfg);
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0].kind == "initial");

  cfg.max_iters = 10;
  cfg.stop_tol = std::numeric_limits<double>::infinity();
  r = run(disk, d, cfg);
  CHECK(r.history.size() == 1);
  CHECK(r.stop_reason == "stop_tol");

  cfg.stop_tol = 0.0;
  cfg.max_iters = 3;
  r = run(disk, d, cfg);
  CHECK(r.history.size() >= 2);
  CHECK(history_monotone(r.history, cfg.armijo_c));

  cfg.max_iters = -1;
  CHECK_THROWS_AS(run(disk, d, cfg), InvalidArgument);
}

TEST_CASE("history helpers") {
  std::vector<IterationRecord> h(3);
  h[0].kind = "initial";
  h[0].j = 1.0;
  h[1].kind = "descent";
  h[1].accepted = true;
  h[1].j = 0.9;
  h[1].step = 0.1;
  h[1].dj = 1.0;
  h[2] = h[1];
  h[2].j = 0.95;
  CHECK_FALSE(history_monotone(h, 1e-4));
  h[2].j = 0.8;
  CHECK(history_monotone(h, 1e-4));

  h[1].kind = "topology, \"x\"";
  const std::string path = "/tmp/helmopt_test_history.csv";
  write_history_csv(h, path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  std::remove(path.c_str());
  const std::string text = ss.str();
  CHECK(text.rfind("iter,kind,J,", 0) == 0);
  CHECK(text.find("\r\n") != std::string::npos);
  CHECK(text.find("\"topology, \"\"x\"\"\"") != std::string::npos);
}
