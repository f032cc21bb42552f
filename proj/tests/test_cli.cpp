#include "conorbit/runner.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

using namespace conorbit;

namespace {

std::string source_path(const std::string& rel) { return std::string(CONORBIT_SOURCE_DIR) + "/" + rel; }

ConfigError config_error(const std::string& text) {
  try {
    build_run_config(ConfigDoc::parse(text));
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a config error for: " << text);
  return ConfigError("", "");
}

}  // namespace

TEST_CASE("config parsing: comments, whitespace and duplicates") {
  ConfigDoc d = ConfigDoc::parse("# header\ntask = minimize   # trailing\n\n  k=0.5\n");
  CHECK(d.values.at("task") == "minimize");
  CHECK(d.values.at("k") == "0.5");
  CHECK(d.lines.at("k") == 4);
  CHECK_THROWS_AS(ConfigDoc::parse("k = 1\nk = 2\n"), ConfigError);
  CHECK_THROWS_AS(ConfigDoc::parse("just words\n"), ConfigError);
}

TEST_CASE("schema errors carry the offending key") {
  CHECK(config_error("k = 0.5\n").key() == "task");
  CHECK(config_error("task = fly\n").key() == "task");
  CHECK(config_error("task = minimize\nsolver.Nn = 3\n").key() == "solver.Nn");
  CHECK(config_error("task = minimize\nk = abc\n").key() == "k");
  CHECK(config_error("task = minimize\nmodel.id = nope\n").key() == "model.id");
  CHECK(config_error("task = minimize\nmodel.colour = 1\n").key() == "model.colour");
  CHECK(config_error("task = minimize\nscenario = nope\n").key() == "scenario");
  CHECK(config_error("task = minimize\nsolver.N = 4\n").key() == "solver");
  CHECK(config_error("task = mountain_pass\nscenario = torus_example\n").key() == "anchor.x");
  CHECK(config_error("task = struwe_scan\nscenario = figure4\nk_grid = 0.3:0.1:0.05\n").key() == "k_grid");
  CHECK(config_error("task = no_connection\nscenario = torus_example\n").key() == "q0.kind");
  CHECK(config_error("task = minimize\nq0.kind = triangle\n").key() == "q0.kind");
}

TEST_CASE("grids parse as ranges or lists") {
  auto g = parse_grid("k_grid", "0.15:0.45:0.05");
  REQUIRE(g.size() == 7);
  CHECK(g.front() == doctest::Approx(0.15));
  CHECK(g.back() == doctest::Approx(0.45));
  CHECK(parse_grid("k_grid", "0.1, 0.2,0.4").size() == 3);
  CHECK_THROWS_AS(parse_grid("k_grid", "0.4,0.1"), ConfigError);
  CHECK_THROWS_AS(parse_grid("k_grid", "1:2"), ConfigError);
}

TEST_CASE("documented schema lists exactly the accepted keys") {
  std::ifstream in(source_path("schema/config_schema.md"));
  REQUIRE(in);
  std::regex row(R"(^\| `([^`]+)` \| ([a-z]+) \| ([^|]+) \|)");
  std::set<std::pair<std::string, std::string>> documented, accepted;
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_search(line, m, row)) documented.insert({m[1], m[2]});
  }
  for (const auto& e : config_schema()) accepted.insert({e.key, e.type});
  CHECK(documented == accepted);
}

TEST_CASE("every built-in scenario builds and its anchor lies on both curves") {
  for (const auto& sc : builtin_scenarios()) {
    CAPTURE(sc.name);
    ModelPtr m = sc.model();
    PathSpace space = sc.space();
    if (sc.anchor) {
      CHECK(std::abs(space.q0().level(m->chart(), *sc.anchor)) <= 1e-9);
      CHECK(std::abs(space.q1().level(m->chart(), *sc.anchor)) <= 1e-9);
    }
    CHECK_FALSE(sc.description.empty());
  }
}

TEST_CASE("shipped example configs validate") {
  int count = 0;
  for (const auto& f : std::filesystem::directory_iterator(source_path("configs"))) {
    CAPTURE(f.path().string());
    CHECK_NOTHROW(build_run_config(ConfigDoc::load(f.path().string())));
    ++count;
  }
  CHECK(count >= 8);
}

TEST_CASE("identical config and seed give identical files") {
  RunConfig rc = build_run_config(ConfigDoc::parse(
      "task = minimize\nscenario = torus_example\nk = 0.75\ncomponent.y = 1\nsolver.multistart = 3\nseed = 9\n"));
  std::ostringstream log;
  RunResult a = run_config(rc, log), b = run_config(rc, log);
  CHECK(a.exit_code == 0);
  CHECK(a.files == b.files);
  CHECK(a.files.count("summary.csv") == 1);
  CHECK(a.files.count("path_best.csv") == 1);
  CHECK(a.files.count("trajectory_best.csv") == 1);
  CHECK(a.files.count("verdict.json") == 1);
  rc.threads = 3;
  rc.solver.threads = 3;
  RunResult c = run_config(rc, log);
  CHECK(c.files.at("path_best.csv") == a.files.at("path_best.csv"));
}

TEST_CASE("summary CSV has the documented columns") {
  RunConfig rc = build_run_config(ConfigDoc::parse("task = minimize\nscenario = flat_points\nsolver.multistart = 1\n"));
  std::ostringstream log;
  RunResult r = run_config(rc, log);
  std::istringstream in(r.files.at("summary.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "label,status,k,action,T,N,iterations,grad_norm,el_residual,energy_mismatch,"
                  "conormal_0,conormal_1,shooting_gap,energy_drift,bound_violations");
  std::istringstream traj(r.files.at("trajectory_best.csv"));
  std::getline(traj, header);
  CHECK(header == "t,x,y,vx,vy,E");
}

TEST_CASE("exit codes: pass, assertion failure, configuration error") {
  std::ostringstream log;
  RunConfig pass = build_run_config(ConfigDoc::parse(
      "task = no_connection\nscenario = torus_example\nq1.kind = point\nq1.x = 0.5\nq1.y = 0.5\nk = 0.08\nexpect.verdict = DISJOINT\n"));
  CHECK(run_config(pass, log).exit_code == 0);
  pass.expect.verdict = "OVERLAP";
  CHECK(run_config(pass, log).exit_code == 1);

  auto dir = std::filesystem::temp_directory_path() / "conorbit_cli_test";
  std::filesystem::create_directories(dir);
  auto file = (dir / "bad.conf").string();
  std::ofstream(file) << "task = minimize\nbogus = 1\n";
  RunOptions opts;
  opts.out_dir = (dir / "out").string();
  CHECK(run_scenario_file(file, opts, log).exit_code == 2);
  CHECK(run_scenario_file((dir / "missing.conf").string(), opts, log).exit_code == 2);
  CHECK(reproduce_suite("no_such_fixture", ReproContext{}, log).exit_code == 2);
}

TEST_CASE("every fixture carries a provenance anchor and a claim") {
  CHECK(incomplete_fixtures().empty());
  std::set<std::string> names;
  for (const auto& t : repro_targets()) {
    CHECK_FALSE(t.anchor.empty());
    CHECK(names.insert(t.name).second);
  }
  for (const char* required : {"torus_c", "torus_cu", "torus_path_action", "ladder_loops",
                               "conserved_momentum", "no_connection", "figure4_kN",
                               "hyperbolic_length", "hyperbolic_area", "hyperbolic_action"}) {
    CHECK(names.count(required) == 1);
  }
}

TEST_CASE("reproduce writes a table and a verdict for one fixture") {
  std::ostringstream log;
  RunResult r = reproduce_suite("hyperbolic_length", ReproContext{}, log);
  CHECK(r.exit_code == 0);
  CHECK(r.files.at("reproduce.csv").rfind("name,provenance,anchor,passed\nhyperbolic_length,reference,", 0) == 0);
  CHECK(r.verdict["passed"] == true);
}
