#include "commands.hpp"
#include "config.hpp"
#include "expression.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace helmopt;
using namespace helmopt::cli;

namespace {

int run_exe(const std::string& args) {
  const std::string cmd = std::string(HELMOPT_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("expressions") {
  const Vec2 p(0.5, 2.0);
  CHECK(Expression::parse("1 + x + y^2/2")(p) == doctest::Approx(3.5));
  CHECK(Expression::parse("-2^2")(p) == doctest::Approx(-4.0));
  CHECK(Expression::parse("2^3^2")(p) == doctest::Approx(512.0));
  CHECK(Expression::parse("sin(pi*x)*exp(-y)")(p) == doctest::Approx(std::exp(-2.0)));
  CHECK(Expression::parse("sqrt(abs(-16)) + log(1) + cos(0) + tan(0)")(p) == doctest::Approx(5.0));
  CHECK(Expression::parse("3*pi").is_constant());
  CHECK_FALSE(Expression::parse("3*y").is_constant());

  try {
    Expression::parse("1 + * x");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("4") != std::string::npos);
  }
  CHECK_THROWS_AS(Expression::parse("foo(x)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("(x + 1"), ParseError);
}

TEST_CASE("config merging") {
  const Json& d = default_config();
  const Json merged = merge_config(d, Json::parse(R"({"problem": {"k2": 2.5, "f": 3}, "bc": "neumann"})"));
  CHECK(merged["problem"]["k2"] == 2.5);
  CHECK(merged["problem"]["gamma"] == 1.0);
  CHECK(merged["bc"] == "neumann");

  try {
    merge_config(d, Json::parse(R"({"problem": {"kk": 1}})"));
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("problem.kk") != std::string::npos);
  }
  CHECK_THROWS_AS(merge_config(d, Json::parse(R"({"optimize": {"max_iters": "many"}})")), ConfigError);
  CHECK_NOTHROW(merge_config(d, Json::parse(R"({"mesh": {"outer": {"type": "disk", "anything": 1}}})")));

  const Json over = apply_overrides(d, {"problem.k2=4", "bc=obstacle", "eigs.count=3"});
  CHECK(over["problem"]["k2"] == 4);
  CHECK(over["bc"] == "obstacle");
  CHECK_THROWS_AS(apply_overrides(d, {"nope.x=1"}), ConfigError);

  CHECK(digest(d) == digest(default_config()));
  CHECK(digest(d) != digest(over));
  CHECK(digest(d).size() == 16);

  CHECK_THROWS_AS(load_config("/nonexistent/config.json", {}), ConfigError);
}

TEST_CASE("config builders") {
  Json c = apply_overrides(default_config(), {"mesh.type=rectangle", "mesh.h=0.25", "problem.f=x+y"});
  const Mesh m = build_mesh(c);
  CHECK(m.total_area() == doctest::Approx(1.0));
  const ProblemData d = build_problem(c);
  CHECK(d.f.eval(m, 0, {1.0, 0.0, 0.0}) == doctest::Approx(m.node(m.triangle(0)[0]).sum()));
  CHECK(build_variant(apply_overrides(c, {"bc=neumann"})) == BcVariant::Neumann);
  CHECK_THROWS(build_variant(apply_overrides(c, {"bc=robin"})));
  CHECK_THROWS(build_mesh(apply_overrides(c, {"mesh.type=hexagon"})));

  const auto v = build_velocity(apply_overrides(c, {"velocity.type=translate_y"}), m);
  for (const auto& x : v.sample(m)) CHECK(x == Vec2(0, 1));
}

TEST_CASE("csv quoting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("executable exit codes") {
  const auto dir = std::filesystem::temp_directory_path() / "helmopt_cli_test";
  std::filesystem::create_directories(dir);
  const std::string out = "-o " + dir.string();

  CHECK(run_exe("solve -c /nonexistent/config.json " + out) == 1);
  CHECK(run_exe("solve -s problem.kk=1 " + out) == 1);
  CHECK(run_exe("solve -s 'problem.f=sin(' " + out) == 1);
  CHECK(run_exe("solve -s mesh.h=0.2 " + out) == 0);
  CHECK(std::filesystem::exists(dir / "summary.json"));

  std::ifstream in(dir / "summary.json");
  const Json summary = Json::parse(in);
  CHECK(summary["command"] == "solve");
  CHECK(summary["exit_code"] == 0);
  std::filesystem::remove_all(dir);
}
