#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "loopfield/driver.hpp"
#include "loopfield/sampler.hpp"

namespace lf {

enum class EqKind { Single, String, Unified };

/** Multiplicative factors on coefficient families: lhs, deformation, splitting, merger, twist, expansion. */
struct CoefficientOverride {
  std::map<std::string, double> factor;

  double get(const std::string& family) const;
  /** "family:factor", e.g. "splitting:1.1"; empty text gives no override. */
  static CoefficientOverride parse(const std::string& text);
  bool empty() const { return factor.empty(); }
};

const std::vector<std::string>& coefficient_families();

struct EquationSpec {
  GroupSpec group;
  LoopString subject;
  size_t component = 0;
  size_t x = 0;  // location in subject.loops[component]
  double eps = 0.25;
  EqKind kind = EqKind::Single;
  CoefficientOverride perturb;
};

struct Term {
  std::string tag;     // D-, D+, S-, S+, M-, M+, T-, T+, E-, E+
  std::string family;  // deformation, splitting, merger, twist, expansion
  double coef = 0;
  LoopString s;
};

/** lhs_coef * E W(subject) = sum coef * E W(term). */
struct Equation {
  EquationSpec spec;
  Bond b;
  double lhs_coef = 1;
  std::vector<Term> terms;

  size_t count(const std::string& tag) const;
  double coef_of(const std::string& tag) const;  // first term with the tag, 0 if none
};

Equation assemble(const EquationSpec& spec);

struct EquationReport {
  double lhs = 0, lhs_sigma = 0;
  double rhs = 0, rhs_sigma = 0;
  double residual = 0, residual_sigma = 0;
  std::vector<double> values, sigmas;  // per term, unweighted expectations

  /** Sum of coef * value over terms of one family. */
  double family_sum(const Equation& eq, const std::string& family) const;
};

EquationReport evaluate_exact(const Equation& eq, const U1Exact& backend);

/** Strings and linear combinations to estimate on one shared sample stream. */
class McPlan {
 public:
  size_t add_string(const LoopString& s);
  size_t add_combo(const std::vector<std::pair<LoopString, double>>& terms);
  /** Combo index of lhs_coef W(subject) - sum coef W(term). */
  size_t add_residual(const Equation& eq);
  const Observables& observables() const { return obs_; }
  std::vector<LoopString> strings() const { return obs_.strings; }

 private:
  Observables obs_;
  std::map<LoopString, size_t> index_;
};

EquationReport report_mc(const Equation& eq, const McPlan& plan, const McResult& res, size_t residual_combo);

struct Row {
  std::string experiment, group;
  double epsilon = 0;
  std::string triple_id, term;
  double value = 0, sigma = 0, residual = 0, residual_sigma = 0, target = 0, gap = 0;
  double rate = 0;  // log2 of the previous gap over this gap within a series; nan if undefined
};

struct Clause {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SweepReport {
  std::string experiment;
  std::vector<Row> rows;
  std::vector<Clause> clauses;

  void clause(const std::string& name, bool ok, const std::string& detail);
  bool passed() const;
  void append(const SweepReport& other);
};

/** Fill Row::rate over series keyed by (experiment, group, triple_id, term), in row order. */
void fill_rates(std::vector<Row>& rows);
std::string rows_csv(const std::vector<Row>& rows);
std::string report_json(const SweepReport& r);

bool strictly_decreasing(const std::vector<double>& v);

struct Combination {
  std::array<double, 5> a{};  // weights of EW^eps and of deformations at e1, e2, e3inv, e4inv
  std::array<double, 2> b{};  // weights of deformations at e and e_bar
};

struct SweepOptions {
  std::vector<double> eps{0.25, 0.125, 0.0625};
  double final_tol = 1e-2;
  double exact_tol = 1e-9;
};

SweepReport convergence_simple(const GroupSpec& spec, double t, const SweepOptions& opt);
SweepReport convergence_crossing(const std::array<double, 4>& t, const SweepOptions& opt,
                                 const std::vector<Combination>& combos);
SweepReport convergence_square_lobes(double t_left, double t_right, const SweepOptions& opt);
SweepReport correction_identities(const std::array<double, 4>& t, const SweepOptions& opt);
SweepReport convergence_opposed(double t_left, double t_right, const SweepOptions& opt);
SweepReport convergence_merger(const std::array<double, 3>& t, const SweepOptions& opt,
                               const std::vector<Combination>& combos);
SweepReport degenerate_checks(DegenerateKind kind, double eps);

struct DiscreteOptions {
  std::vector<double> eps{0.25, 0.125};
  int random_loops = 50;
  int random_strings = 20;
  std::uint64_t seed = 7;
  double tol = 1e-9;
  CoefficientOverride perturb;
};

SweepReport verify_discrete(const DiscreteOptions& opt);

/** Random closed lattice walk in a small window, reduced to a loop; may be trivial. */
Loop random_loop(Rng& rng, int steps, int radius);

struct McOptions {
  Schedule sched;
  double eps = 0.5;
  int margin = 2;
  bool parallel = true;
  int random_equations = 20;
};

/** Small C-shaped figure-eight used by the Monte-Carlo checks at eps = 1/2. */
FigureEightParams mc_figure_eight_params();

/** Residuals of the master loop equation on a rectangle or figure-eight, plus random locations. */
SweepReport mc_equation_check(const GroupSpec& spec, const std::string& shape, const McOptions& opt);
/** Combination at e, e1, e3inv against the continuum right side with finite differences. */
SweepReport convergence_unified(const GroupSpec& spec, const McOptions& opt);

}  // namespace lf
