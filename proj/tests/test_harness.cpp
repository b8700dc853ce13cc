#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "loopfield/harness.hpp"

using namespace lf;
namespace fs = std::filesystem;

namespace {
ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("loopfield-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}
}  // namespace

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse("[experiment]\nname = nope\n"), ConfigError);
  CHECK_THROWS_AS(parse("[experiment]\noutput = x\n"), ConfigError);
  CHECK_THROWS_AS(parse("[experiment]\nname = loop-ops\ncolour = blue\n"), ConfigError);
  CHECK_THROWS_AS(parse("[bogus]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[experiment]\nname = converge-simple\n[epsilon]\nvalues = 0.25, abc\n"), ConfigError);
  CHECK_THROWS_AS(parse("[experiment]\nname = converge-simple\n[epsilon]\nvalues = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[experiment]\nname = converge-simple\n[group]\ngroups = Sp(4)\n"), ConfigError);
  CHECK_THROWS_AS(parse("[experiment]\nname = converge-crossing\n[geometry]\nareas = 1, 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("[experiment]\nname = verify-discrete\n[test]\nperturb = nothing:2\n"), ConfigError);
  CHECK_THROWS_AS(parse("[experiment]\nname = converge-simple\n[schedule]\nsweeps = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[experiment\nname = x\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/file.ini"), ConfigError);
}

TEST_CASE("config defaults") {
  auto c = parse("[experiment]\nname = converge-simple\n");
  CHECK(c.groups.size() == 2);
  CHECK(c.eps == std::vector<double>{0.25, 0.125, 0.0625});
  CHECK(c.t == 1.0);
  auto x = parse("[experiment]\nname = converge-crossing\n");
  CHECK(x.areas == std::vector<double>{0.5, 1.0, 0.5, 1.5});
  CHECK(x.lobe_area == 0.5625);
  auto g = parse("[experiment]\nname = converge-unified\nseed = 3\n[group]\ngroups = SU(2); SO(3)\n");
  CHECK(g.groups.size() == 2);
  CHECK(g.sched.seed == 3);
  auto d = parse("[experiment]\nname = verify-discrete\n[test]\nperturb = splitting:1.1\n");
  CHECK(d.perturb.get("splitting") == doctest::Approx(1.1));
  CHECK(experiment_names().size() >= 9);
}

TEST_CASE("every shipped config parses") {
  for (const auto& e : fs::directory_iterator(fs::path(LOOPFIELD_SOURCE_DIR) / "configs")) {
    INFO(e.path().string());
    CHECK_NOTHROW(load_config(e.path().string()));
  }
}

TEST_CASE("run writes deterministic csv and json") {
  fs::path dir = scratch("run");
  fs::path ini = dir / "lo.ini";
  std::ofstream(ini) << "[experiment]\nname = loop-ops\noutput = " << (dir / "out" / "lo").string() << "\n";
  std::ostringstream out, err;
  CHECK(run_config_file(ini.string(), out, err) == 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  std::string csv1 = slurp(dir / "out" / "lo.csv");
  CHECK(csv1.rfind("experiment,group,epsilon", 0) == 0);
  auto j = nlohmann::json::parse(slurp(dir / "out" / "lo.json"));
  CHECK(j.contains("clauses"));
  CHECK(out.str().find("PASS") != std::string::npos);
  std::ostringstream out2, err2;
  CHECK(run_config_file(ini.string(), out2, err2) == 0);
  CHECK(slurp(dir / "out" / "lo.csv") == csv1);

  fs::path bad = dir / "bad.ini";
  std::ofstream(bad) << "[experiment]\nname = loop-ops\nwhat = 1\n";
  std::ostringstream o3, e3;
  CHECK(run_config_file(bad.string(), o3, e3) == 2);
}

TEST_CASE("negative control fails with exit 1") {
  std::ostringstream out, err;
  fs::path dir = scratch("neg");
  fs::path ini = dir / "n.ini";
  std::ofstream(ini) << "[experiment]\nname = verify-discrete\n[discrete]\nrandom_loops = 5\nrandom_strings = 2\n"
                     << "[test]\nperturb = splitting:1.1\n";
  CHECK(run_config_file(ini.string(), out, err) == 1);
  CHECK(out.str().find("FAIL") != std::string::npos);
}

TEST_CASE("fixtures round trip") {
  fs::path dir = scratch("fix");
  auto written = emit_fixtures("loop-ops", dir.string());
  REQUIRE(written.size() == 1);
  std::ifstream f(written[0]);
  auto j = nlohmann::json::parse(f);
  auto cases = loop_op_cases();
  REQUIRE(j.size() == cases.size());
  for (size_t i = 0; i < cases.size(); ++i) {
    CHECK(j[i]["name"] == cases[i].name);
    CHECK(j[i]["expected"].get<std::vector<std::string>>() == cases[i].expected);
  }
  // the checked-in golden file matches a fresh run
  fs::path golden = fs::path(LOOPFIELD_SOURCE_DIR) / "fixtures" / "loop-ops.json";
  if (fs::exists(golden)) {
    std::ifstream g(golden);
    CHECK(nlohmann::json::parse(g) == j);
  }
  auto tables = emit_fixtures("char-tables", dir.string());
  CHECK(tables.size() == 4);
  std::ifstream t(dir / "char-U1-eps0.5.txt");
  auto loaded = CharCoeffTable::load(t, GroupSpec{Family::U, 1}, 0.5, 20);
  auto fresh = CharCoeffTable::build(GroupSpec{Family::U, 1}, 0.5, 20);
  REQUIRE(loaded.a.size() == fresh.a.size());
  for (size_t i = 0; i < fresh.a.size(); ++i) CHECK(loaded.a[i] == doctest::Approx(fresh.a[i]).epsilon(1e-15));
  auto graphs = emit_fixtures("graphs", dir.string());
  CHECK(graphs.size() == 3);
  fs::path fig = fs::path(LOOPFIELD_SOURCE_DIR) / "fixtures" / "figure-eight.json";
  if (fs::exists(fig)) {
    std::ifstream a(fig), b(dir / "figure-eight.json");
    CHECK(std::string(std::istreambuf_iterator<char>(a), {}) == std::string(std::istreambuf_iterator<char>(b), {}));
  }
  CHECK_THROWS(emit_fixtures("nope", dir.string()));
}
