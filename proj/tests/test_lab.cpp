#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "degen/lab.hpp"

using namespace degen;
namespace fs = std::filesystem;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("degenlab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

RunOutcome run_text(const std::string& text, const fs::path& out) {
  std::ostringstream log;
  return run_experiment(resolve(parse(text)), out, log);
}

const char* kSolve = R"(
# radial model
[run]
subcommand = solve
[problem]
case = radial_homogeneous
d = 2
n = 2
a = -1.5
[grid]
nodes = 33
)";

}  // namespace

TEST_CASE("config parsing") {
  const Config c = parse("[problem]\na = -1.5  # trailing comment\n\n[grid]\nnodes=17\n");
  REQUIRE(c.find("problem", "a"));
  CHECK(*c.find("problem", "a") == "-1.5");
  CHECK(*c.find("grid", "nodes") == "17");
  CHECK_FALSE(c.has("grid", "half_width"));

  CHECK_THROWS_AS(parse("[problme]\na = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem]\nalpha = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem]\na = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("a = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem]\na\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem]\na =\n"), ConfigError);
}

TEST_CASE("resolution validates values") {
  const ExperimentConfig e = resolve(parse(kSolve));
  CHECK(e.subcommand == Subcommand::solve);
  CHECK(e.nodes == 33);
  CHECK(e.solver.tol == 1e-10);
  CHECK(e.solver.maxit == 20000);
  CHECK_FALSE(e.echo.empty());

  try {
    resolve(parse("[problem]\na = -2.5\nn = 2\n"));
    FAIL("expected a configuration error");
  } catch (const ConfigError& err) {
    CHECK(std::string(err.what()).find("a+n must lie in (0,2)") != std::string::npos);
  }
  CHECK_THROWS_AS(resolve(parse("[grid]\nnodes = 64\n")), ConfigError);
  CHECK_THROWS_AS(resolve(parse("[grid]\nnodes = many\n")), ConfigError);
  CHECK_THROWS_AS(resolve(parse("[problem]\ncase = nothing\n")), ConfigError);
  CHECK_THROWS_AS(resolve(parse("[run]\nsubcommand = plot\n")), ConfigError);
  CHECK_THROWS_AS(resolve(parse("[eps]\nschedule = 0.1, 0.2\n")), ConfigError);
  CHECK_THROWS_AS(resolve(parse("[fault]\ninject = noise\n")), ConfigError);
  CHECK_THROWS_AS(resolve(parse("[problem]\nA = 1, 0; 0\n")), ConfigError);

  Overrides ov;
  ov.grid_nodes = 65;
  ov.seed = 99;
  const ExperimentConfig o = resolve(parse(kSolve), ov);
  CHECK(o.nodes == 65);
  CHECK(o.seed == 99);
  ov.grid_nodes = 10;
  CHECK_THROWS_AS(resolve(parse(kSolve), ov), ConfigError);
}

TEST_CASE("solve run writes a manifest and a solution table") {
  const fs::path out = scratch("solve");
  const RunOutcome r = run_text(kSolve, out);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out / "solution.csv"));
  CHECK(fs::exists(out / "timing.json"));
  const auto j = manifest(out);
  CHECK(j["subcommand"] == "solve");
  CHECK(j["tool"]["version"] == kToolVersion);
  CHECK(j["status"]["exit_code"] == 0);
  CHECK(j["config"]["problem.case"] == "radial_homogeneous");
  CHECK(j["grid"]["nodes_per_axis"] == 33);
  CHECK(j["solver"]["tol"] == 1e-10);
  for (const auto& c : j["checks"]) CHECK(c["passed"] == true);
  std::ifstream csv(out / "solution.csv");
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  CHECK(header == "tag,node,x0,x1,value");
  CHECK(row.rfind("weak_form_consistency,0,", 0) == 0);
}

TEST_CASE("reruns are byte identical") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string text = std::string(kSolve) + "[frequency]\nfields = 3\n";
  std::string freq = text;
  freq.replace(freq.find("subcommand = solve"), 18, "subcommand = frequency");
  run_text(freq, a);
  run_text(freq, b);
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    if (name == "timing.json") continue;
    CAPTURE(name.string());
    CHECK(slurp(a / name) == slurp(b / name));
  }
}

TEST_CASE("configuration errors exit with code 2 and still write a manifest") {
  const fs::path dir = scratch("bad");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.cfg") << "[problem]\na = -2.5\nn = 2\n";
  std::ostringstream log;
  const RunOutcome r = run_config_file(dir / "bad.cfg", {}, dir / "out", log);
  CHECK(r.exit_code == 2);
  CHECK(r.message.find("a+n must lie in (0,2)") != std::string::npos);
  CHECK(manifest(dir / "out")["status"]["exit_code"] == 2);
}

TEST_CASE("injected faults are caught by named checks") {
  SUBCASE("wrong forcing") {
    const fs::path out = scratch("wrong_forcing");
    const RunOutcome r = run_text(std::string(kSolve) + "[fault]\ninject = wrong_forcing\n", out);
    CHECK(r.exit_code == 1);
    CHECK(r.message.find("forcing_consistency") != std::string::npos);
    CHECK(manifest(out)["status"]["exit_code"] == 1);
  }
  SUBCASE("indefinite matrix") {
    const fs::path out = scratch("indefinite");
    const RunOutcome r = run_text(std::string(kSolve) + "[fault]\ninject = indefinite_matrix\n", out);
    CHECK(r.exit_code == 3);
    CHECK(r.message.find("solver_converged") != std::string::npos);
    CHECK(fs::exists(out / "manifest.json"));
  }
  SUBCASE("noise") {
    std::string text = std::string(kSolve) + "[frequency]\nfields = 0\n[fault]\ninject = noise\n";
    text.replace(text.find("subcommand = solve"), 18, "subcommand = frequency");
    text.replace(text.find("nodes = 33"), 10, "nodes = 65");
    const fs::path out = scratch("noise");
    const RunOutcome r = run_text(text, out);
    CHECK(r.exit_code == 1);
    CHECK(r.message.find("derivative_identity") != std::string::npos);
  }
}

TEST_CASE("compare runs") {
  const fs::path a = scratch("cmp_a"), b = scratch("cmp_b"), c = scratch("cmp_c");
  run_text(kSolve, a);
  run_text(kSolve, b);
  const CompareReport same = compare_runs(a / "manifest.json", b / "manifest.json");
  CHECK(same.rows.empty());
  CHECK(same.check_changes.empty());
  CHECK_FALSE(same.regression);

  auto j = manifest(b);
  j["metrics"]["error.linf_half_ball"] = j["metrics"]["error.linf_half_ball"].get<double>() * 1.5;
  std::ofstream(b / "perturbed.json") << j.dump(2);
  const CompareReport pert = compare_runs(a / "manifest.json", b / "perturbed.json");
  CHECK(pert.regression);
  REQUIRE(pert.rows.size() == 1);
  CHECK(pert.rows[0].metric == "error.linf_half_ball");

  std::string list = kSolve;
  list.replace(list.find("subcommand = solve"), 18, "subcommand = list-cases");
  run_text(list, c);
  CHECK_THROWS_AS(compare_runs(a / "manifest.json", c / "manifest.json"), ConfigError);
}

TEST_CASE("list cases") {
  std::ostringstream os;
  print_catalog(os);
  const std::string s = os.str();
  for (const char* name : {"radial_homogeneous", "anisotropic", "linear_x", "quadratic_y", "quadratic_x",
                           "counterexample_F", "compliant_F"})
    CHECK(s.find(name) != std::string::npos);
  CHECK(to_string(subcommand_from("sweep-eps")) == "sweep-eps");
}
