#include <iostream>

#include <CLI11.hpp>

#include "loopfield/harness.hpp"

namespace {

// exact-backend suite: everything that needs no sampling
int selftest() {
  using namespace lf;
  std::vector<SweepReport> reports;
  reports.push_back(loop_ops_report());
  reports.push_back(verify_discrete({}));
  SweepOptions o;
  for (GroupSpec g : {GroupSpec{Family::U, 1}, GroupSpec{Family::U, 2}}) reports.push_back(convergence_simple(g, 1.0, o));
  const std::vector<Combination> combos{{{0, 0.5, 0, 0.5, 0}, {1, 0}}, {{0.2, 0.2, 0.1, 0.3, 0.2}, {0.7, 0.3}}};
  reports.push_back(convergence_crossing({0.5, 1.0, 0.5, 1.5}, o, combos));
  reports.push_back(convergence_square_lobes(0.5625, 0.5625, o));
  reports.push_back(convergence_opposed(0.5625, 0.5625, o));
  reports.push_back(correction_identities({0.5, 1.0, 0.5, 1.5}, o));
  reports.push_back(convergence_merger({0.5, 1.0, 1.0}, o, combos));
  reports.push_back(degenerate_checks(DegenerateKind::ThreeFace, 0.125));
  reports.push_back(degenerate_checks(DegenerateKind::Unbounded, 0.125));
  size_t bad = 0, total = 0;
  for (const auto& r : reports)
    for (const auto& c : r.clauses) {
      ++total;
      if (!c.passed) {
        ++bad;
        std::cout << "FAIL " << r.experiment << ": " << c.name << " : " << c.detail << "\n";
      }
    }
  std::cout << (bad ? "FAIL" : "PASS") << " selftest (" << total - bad << "/" << total << " clauses)\n";
  return bad ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loopfield: lattice Yang-Mills loop-equation lab"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "run the experiment described by an INI config");
  run->add_option("config", config, "config file")->required();

  std::string kind, dir = "fixtures";
  auto* fix = app.add_subcommand("fixtures", "regenerate golden fixtures");
  fix->add_option("kind", kind, "loop-ops | graphs | char-tables")
      ->required()
      ->check(CLI::IsMember({"loop-ops", "graphs", "char-tables"}));
  fix->add_option("--dir", dir, "output directory");

  app.add_subcommand("selftest", "exact-backend suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return lf::run_config_file(config, std::cout, std::cerr);
    if (*fix) {
      for (const auto& p : lf::emit_fixtures(kind, dir)) std::cout << "wrote " << p << "\n";
      return 0;
    }
    return selftest();
  } catch (const lf::CertificationError& e) {
    std::cerr << "certification failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
