#include "helmopt/mesh.hpp"
#include "helmopt/mesh_io.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <sstream>

using namespace helmopt;

namespace {

std::string temp_path(const std::string& name) { return "/tmp/helmopt_test_" + name; }

}  // namespace

TEST_CASE("rectangle mesh counts cells of the crossed grid") {
  const Mesh m = generate_rectangle(1.0, 1.0, 0.5);
  CHECK(m.num_nodes() == 13);
  CHECK(m.num_triangles() == 16);
  CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.loops(BoundaryTag::Outer).size() == 1);
}

TEST_CASE("rectangle triangle count grows like 1/h^2") {
  const auto n1 = generate_rectangle(1.0, 1.0, 0.1).num_triangles();
  const auto n2 = generate_rectangle(1.0, 1.0, 0.05).num_triangles();
  CHECK(static_cast<double>(n2) / n1 == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("rectangle rejects degenerate dimensions") {
  CHECK_THROWS_AS(generate_rectangle(1.0, 0.0, 0.1), InvalidArgument);
  CHECK_THROWS_AS(generate_rectangle(1.0, 1.0, -0.1), InvalidArgument);
}

TEST_CASE("disk area approaches pi at second order") {
  const Mesh coarse = generate_disk(Vec2::Zero(), 1.0, 0.2);
  CHECK(std::abs(coarse.total_area() - kPi) / kPi < 0.02);
  const Mesh fine = generate_disk(Vec2::Zero(), 1.0, 0.1);
  const double ratio = (kPi - coarse.total_area()) / (kPi - fine.total_area());
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
  CHECK_THROWS_AS(generate_disk(Vec2::Zero(), 1.0, 2.0), InvalidArgument);
}

TEST_CASE("annulus mesh") {
  const Mesh m = generate_annulus(ShapeSpec::disk(Vec2::Zero(), 1.0), ShapeSpec::disk(Vec2::Zero(), 0.3), 0.05);
  CHECK(std::abs(m.total_area() - kPi * 0.91) / (kPi * 0.91) < 0.02);
  CHECK(m.loops(BoundaryTag::Outer).size() == 1);
  CHECK(m.loops(BoundaryTag::Obstacle).size() == 1);

  CHECK_THROWS_AS(
      generate_annulus(ShapeSpec::disk(Vec2::Zero(), 1.0), ShapeSpec::disk(Vec2::Zero(), 1.5), 0.1),
      GeometryError);

  const Mesh sq = generate_annulus(ShapeSpec::rectangle({0, 0}, {3, 3}), ShapeSpec::rectangle({1, 1}, {2, 2}), 0.2);
  CHECK(sq.all_loops().size() == 2);
  CHECK(sq.total_area() == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("punch_hole") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.025);
  const auto p = punch_hole(sq, {Vec2(0.5, 0.5), 0.1});
  const double exact = 1.0 - kPi * 0.01;
  CHECK(std::abs(p.mesh.total_area() - exact) / exact < 0.02);
  CHECK(p.mesh.loops(BoundaryTag::Hole).size() == 1);
  CHECK(p.mesh.min_angle_deg() >= 15.0);
  for (Index v : p.mesh.loops(BoundaryTag::Hole)[0].nodes) {
    CHECK((p.mesh.node(v) - Vec2(0.5, 0.5)).norm() == doctest::Approx(0.1).epsilon(1e-12));
  }

  SUBCASE("hole below the resolution limit") {
    CHECK_THROWS_AS(punch_hole(sq, {Vec2(0.5, 0.5), 0.005}), ResolutionError);
  }
  SUBCASE("hole crossing the boundary") {
    CHECK_THROWS_AS(punch_hole(sq, {Vec2(0.05, 0.5), 0.1}), GeometryError);
  }
  SUBCASE("two sequential punches") {
    const auto q = punch_hole(p.mesh, {Vec2(0.2, 0.2), 0.06});
    CHECK(q.mesh.loops(BoundaryTag::Hole).size() == 2);
    CHECK(q.mesh.total_area() == doctest::Approx(exact - kPi * 0.0036).epsilon(0.02));
  }
}

TEST_CASE("deform") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.1);
  const Mesh same = deform(disk, VelocityField::zero(), 3.7);
  for (Index i = 0; i < disk.num_nodes(); ++i) CHECK(same.node(i) == disk.node(i));

  const Mesh big = deform(disk, VelocityField::dilation(), 0.1);
  for (Index i = 0; i < disk.num_nodes(); ++i) {
    CHECK((big.node(i) - 1.1 * disk.node(i)).norm() < 1e-14);
  }
  CHECK(big.total_area() == doctest::Approx(1.21 * disk.total_area()).epsilon(1e-13));

  // a rotation about a point outside the disk tears it apart at large t
  const auto swirl = VelocityField::analytic([](const Vec2& x) { return Vec2(-x.y() * x.norm(), x.x() * x.norm()); },
                                             "swirl");
  CHECK_THROWS_AS(deform(disk, swirl, 50.0), DeformationError);
}

TEST_CASE("boundary geometry") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.05);
  const auto g = boundary_geometry(disk, BoundaryTag::Outer);
  REQUIRE(g.loops.size() == 1);
  const auto& lg = g.loops[0];
  Vec2 sum = Vec2::Zero();
  double scale = 0.0;
  for (std::size_t i = 0; i < lg.loop.nodes.size(); ++i) {
    CHECK((lg.node_normal[i] - disk.node(lg.loop.nodes[i])).norm() < 0.05 * 0.05);
    sum += lg.edge_normal[i] * lg.edge_length[i];
    scale = std::max(scale, lg.edge_length[i]);
  }
  CHECK(sum.norm() < 1e-12 * scale);

  const Mesh ann = generate_annulus(ShapeSpec::disk(Vec2::Zero(), 1.0), ShapeSpec::disk(Vec2::Zero(), 0.3), 0.1);
  const auto ob = boundary_geometry(ann, BoundaryTag::Obstacle);
  for (std::size_t i = 0; i < ob.loops[0].loop.nodes.size(); ++i) {
    const Vec2 x = ann.node(ob.loops[0].loop.nodes[i]);
    CHECK(ob.loops[0].node_normal[i].dot(-x.normalized()) > 0.99);
  }
  CHECK_THROWS_AS(boundary_geometry(disk, BoundaryTag::Obstacle), LookupError);
}

TEST_CASE("msh import") {
  const std::string text =
      "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"
      "$Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n"
      "$Elements\n1\n1 2 2 10 1 1 2 3\n$EndElements\n";
  std::istringstream in(text);
  const Mesh m = parse_msh(in);
  CHECK(m.num_triangles() == 1);
  CHECK(m.boundary_edges().size() == 3);

  std::istringstream cut("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n3\n1 0 0 0\n");
  try {
    parse_msh(cut);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("Nodes") != std::string::npos);
  }
}

TEST_CASE("msh round trip") {
  const Mesh sq = generate_rectangle(1.0, 1.0, 0.125);
  const std::string path = temp_path("roundtrip.msh");
  write_msh(sq, path);
  const Mesh back = import_msh(path);
  std::remove(path.c_str());
  REQUIRE(back.num_nodes() == sq.num_nodes());
  REQUIRE(back.num_triangles() == sq.num_triangles());
  for (Index t = 0; t < sq.num_triangles(); ++t) {
    CHECK(std::abs(back.signed_area(t) - sq.signed_area(t)) < 1e-12);
  }
}

TEST_CASE("vtk round trip") {
  const Mesh disk = generate_disk(Vec2::Zero(), 1.0, 0.25);
  const std::string path = temp_path("roundtrip.vtk");
  export_vtk(disk, {{"r", std::vector<double>(disk.num_nodes(), 1.0)}}, path);
  const Mesh back = import_vtk(path);
  std::remove(path.c_str());
  CHECK(back.num_nodes() == disk.num_nodes());
  CHECK(back.total_area() == doctest::Approx(disk.total_area()).epsilon(1e-12));
}
