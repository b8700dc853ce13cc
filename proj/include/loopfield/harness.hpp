#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "loopfield/mm.hpp"

namespace lf {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/** Parsed INI experiment description; see README for the key list. */
struct ExperimentConfig {
  std::string experiment;
  std::string output;  // path prefix for .csv and .json; empty writes nothing
  std::uint64_t seed = 1;

  std::vector<GroupSpec> groups;
  std::vector<double> eps;
  double t = 1.0;
  std::vector<double> areas;
  double lobe_area = 0.5625;
  std::vector<std::string> parts;
  std::vector<Combination> combos;

  Schedule sched;
  int margin = 2;
  int random_equations = 20;
  int random_loops = 50;
  int random_strings = 20;

  double final_tol = 1e-2;
  double exact_tol = 1e-9;
  CoefficientOverride perturb;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::istream& in);
const std::vector<std::string>& experiment_names();

SweepReport run_experiment(const ExperimentConfig& cfg);

/** Load, run, write outputs, print clause lines; returns the process exit code. */
int run_config_file(const std::string& path, std::ostream& out, std::ostream& err);

/** Single-plaquette box: E W_p against a_std(eps). */
SweepReport single_plaquette_check(const GroupSpec& spec, double eps, const Schedule& sched, bool parallel);
/** Exactly representable diagonal gauge maps applied before every measurement must not change a single bit. */
SweepReport gauge_bit_identity(const GroupSpec& spec, double eps, const Schedule& sched);
SweepReport sampler_statistics(double eps, long samples, std::uint64_t seed);
SweepReport gauss_lemma_report(const std::vector<double>& eps_u2, const std::vector<double>& eps_j1);

struct LoopOpCase {
  std::string name, op;
  std::vector<std::string> input, expected, got;
  bool match = false;
};

/** Word-surgery oracles: each case pairs a library call with the hand-assembled result. */
std::vector<LoopOpCase> loop_op_cases();
SweepReport loop_ops_report();

/** Writes fixture files for kind into dir; returns the written paths. */
std::vector<std::string> emit_fixtures(const std::string& kind, const std::string& dir);

}  // namespace lf
