#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "loopfield/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string config(const std::string& name) {
  return (fs::path(LOOPFIELD_SOURCE_DIR) / "configs" / (name + ".ini")).string();
}

// runs a committed config; failing clause lines are kept for the report
Outcome run_named(const std::string& name) {
  std::ostringstream out, err;
  int rc = lf::run_config_file(config(name), out, err);
  Outcome o;
  o.ok = rc == 0;
  std::istringstream lines(out.str());
  std::string line, summary;
  while (std::getline(lines, line)) {
    if (line.rfind("FAIL", 0) == 0) std::cout << "    " << line << "\n";
    if (!line.empty()) summary = line;
  }
  if (!err.str().empty()) std::cout << "    " << err.str();
  o.detail = "exit " + std::to_string(rc) + ", " + summary;
  return o;
}

double max_residual(const lf::SweepReport& r) {
  double m = 0;
  for (const auto& row : r.rows) m = std::max(m, std::abs(row.residual));
  return m;
}

Outcome negative_control() {
  Outcome o{true, ""};
  for (const std::string fam : {"lhs", "deformation", "splitting", "merger"}) {
    lf::DiscreteOptions opt;
    opt.perturb = lf::CoefficientOverride::parse(fam + ":1.1");
    double m = max_residual(lf::verify_discrete(opt));
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s %.3g; ", fam.c_str(), m);
    o.detail += buf;
    o.ok = o.ok && m > 1e-3;
  }
  std::ostringstream out, err;
  int rc = lf::run_config_file(config("negative-control"), out, err);
  o.detail += "negative-control exit " + std::to_string(rc);
  o.ok = o.ok && rc == 1;
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string title;
    double limit_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "loop-algebra oracle suite", 1, [] { return run_named("loop-ops"); }},
      {2, "exact discrete identity on U(1)", 60, [] { return run_named("verify-discrete"); }},
      {3, "simple-loop convergence", 60, [] { return run_named("converge-simple"); }},
      {4, "crossing convergence", 300, [] { return run_named("converge-crossing"); }},
      {5, "correction-term identities", 120, [] { return run_named("correction-identities"); }},
      {6, "merger convergence", 120, [] { return run_named("converge-merger"); }},
      {7, "Gaussian lemma", 120, [] { return run_named("gauss-lemma"); }},
      {8, "Monte-Carlo statistical suite", 900, [] { return run_named("sample-diagnostics"); }},
      {9, "unified-group continuum consistency", 0, [] { return run_named("converge-unified"); }},
      {10, "degenerate cases", 30, [] { return run_named("degenerate"); }},
      {11, "negative control", 0, negative_control},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = c.limit_s <= 0 || s < c.limit_s;
    bool ok = o.ok && in_time;
    failed += !ok;
    char t[64];
    if (c.limit_s > 0)
      std::snprintf(t, sizeof t, "%.2f s / %.0f s", s, c.limit_s);
    else
      std::snprintf(t, sizeof t, "%.2f s", s);
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " [" << t << "] "
              << o.detail << std::endl;
  }
  std::cout << (failed ? "FAIL" : "PASS") << " acceptance: " << criteria.size() - failed << "/" << criteria.size()
            << " criteria" << std::endl;
  return failed ? 1 : 0;
}
