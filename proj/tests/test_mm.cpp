#include <doctest.h>

#include <cmath>

#include "loopfield/mm.hpp"

using namespace lf;

namespace {
const GroupSpec U1{Family::U, 1}, U2{Family::U, 2}, SU2{Family::SU, 2}, SO3{Family::SO, 3};

EquationSpec at(const GroupSpec& g, const Loop& l, size_t x, double eps) {
  EquationSpec s;
  s.group = g;
  s.subject = LoopString{{l}};
  s.x = x;
  s.eps = eps;
  return s;
}
}  // namespace

TEST_CASE("rectangle: four deformation terms only") {
  AnnotatedLoop r = rectangle_cells(3, 2, 0.25);
  for (size_t x = 0; x < r.loop.size(); ++x) {
    Equation eq = assemble(at(U1, r.loop, x, 0.25));
    CHECK(eq.terms.size() == 4);
    CHECK(eq.count("D-") == 2);
    CHECK(eq.count("D+") == 2);
    CHECK(eq.lhs_coef == 1.0);
    CHECK(eq.coef_of("D-") == doctest::Approx(8.0));
    CHECK(eq.coef_of("D+") == doctest::Approx(-8.0));
  }
}

TEST_CASE("figure-eight at the doubled bond") {
  AnnotatedLoop f = figure_eight({0.5, 1.0, 0.5, 1.5}, 0.25);
  const size_t x = f.ann.e.front();
  Equation eq = assemble(at(U2, f.loop, x, 0.25));
  CHECK(eq.count("D-") == 2);
  CHECK(eq.count("D+") == 2);
  CHECK(eq.count("S+") == 1);
  CHECK(eq.coef_of("S+") == -1.0);
  CHECK(eq.count("T-") == 0);
  CHECK(eq.terms.size() == 5);
  CHECK(eq.lhs_coef == 1.0);

  Equation so = assemble(at(SO3, f.loop, x, 0.25));
  CHECK(so.count("T-") == 1);
  CHECK(so.coef_of("T-") == doctest::Approx(1.0 / 3.0));
  CHECK(so.lhs_coef == doctest::Approx(2.0 / 3.0));
  CHECK(so.count("E+") == 0);

  Equation su = assemble(at(SU2, f.loop, x, 0.25));
  CHECK(su.count("E+") == 2);
  CHECK(su.count("E-") == 2);
  CHECK(su.count("T-") == 0);
  // n+ = 1, n- = 0: 1 - 2/N^2
  CHECK(su.lhs_coef == doctest::Approx(0.5));
}

TEST_CASE("assembly is deterministic and validates locations") {
  AnnotatedLoop f = figure_eight({0.5, 1.0, 0.5, 1.5}, 0.125);
  auto a = assemble(at(SU2, f.loop, 3, 0.125)), b = assemble(at(SU2, f.loop, 3, 0.125));
  REQUIRE(a.terms.size() == b.terms.size());
  for (size_t i = 0; i < a.terms.size(); ++i) {
    CHECK(a.terms[i].tag == b.terms[i].tag);
    CHECK(a.terms[i].s == b.terms[i].s);
  }
  CHECK_THROWS_AS(assemble(at(U1, f.loop, f.loop.size(), 0.125)), LoopError);
}

TEST_CASE("U(1) exact residuals vanish") {
  U1Exact ex(0.25);
  AnnotatedLoop f = figure_eight({0.5, 1.0, 0.5, 1.5}, 0.25);
  double worst = 0;
  for (size_t x = 0; x < f.loop.size(); ++x)
    worst = std::max(worst, std::abs(evaluate_exact(assemble(at(U1, f.loop, x, 0.25)), ex).residual));
  CHECK(worst < 1e-9);

  AnnotatedString m = merger_pair(0.5, 1.0, 1.0, 0.25);
  EquationSpec s;
  s.group = U1;
  s.subject = m.s;
  s.kind = EqKind::String;
  s.eps = 0.25;
  worst = 0;
  size_t mergers = 0;
  for (size_t c = 0; c < m.s.loops.size(); ++c)
    for (size_t x = 0; x < m.s.loops[c].size(); ++x) {
      s.component = c;
      s.x = x;
      Equation eq = assemble(s);
      mergers += eq.count("M+") + eq.count("M-");
      worst = std::max(worst, std::abs(evaluate_exact(eq, ex).residual));
    }
  CHECK(worst < 1e-9);
  CHECK(mergers > 0);
}

TEST_CASE("perturbed coefficients break the identity") {
  DiscreteOptions o;
  o.random_loops = 10;
  o.random_strings = 5;
  CHECK(verify_discrete(o).passed());
  o.perturb = CoefficientOverride::parse("deformation:1.1");
  CHECK_FALSE(verify_discrete(o).passed());
  CHECK(CoefficientOverride::parse("").empty());
  CHECK(CoefficientOverride::parse("merger:2").get("merger") == 2.0);
  CHECK(CoefficientOverride::parse("merger:2").get("lhs") == 1.0);
  CHECK_THROWS(CoefficientOverride::parse("bogus:2"));
}

TEST_CASE("convergence sweeps on the exact backend") {
  SweepOptions o;
  CHECK(convergence_simple(U1, 1.0, o).passed());
  CHECK(convergence_simple(U2, 1.0, o).passed());
  const std::vector<Combination> combos{{{0, 0.5, 0, 0.5, 0}, {1, 0}}, {{0.2, 0.2, 0.1, 0.3, 0.2}, {0.7, 0.3}}};
  CHECK(convergence_crossing({0.5, 1.0, 0.5, 1.5}, o, combos).passed());
  CHECK(convergence_merger({0.5, 1.0, 1.0}, o, combos).passed());
  CHECK(convergence_square_lobes(0.5625, 0.5625, o).passed());
  CHECK(convergence_opposed(0.5625, 0.5625, o).passed());
  CHECK(correction_identities({0.5, 1.0, 0.5, 1.5}, o).passed());
  CHECK(degenerate_checks(DegenerateKind::ThreeFace, 0.125).passed());
  CHECK(degenerate_checks(DegenerateKind::Unbounded, 0.125).passed());
}

TEST_CASE("Monte-Carlo residuals at small budget") {
  McOptions o;
  o.sched.sweeps = 2000;
  o.sched.burn_in = 300;
  o.sched.block = 100;
  o.sched.chains = 2;
  o.sched.seed = 5;
  o.random_equations = 4;
  auto r = mc_equation_check(SU2, "rectangle", o);
  CHECK(r.passed());
  CHECK_FALSE(r.rows.empty());
}

TEST_CASE("rates, csv, strictly decreasing") {
  std::vector<Row> rows(3);
  for (int i = 0; i < 3; ++i) {
    rows[i].experiment = "x";
    rows[i].group = "U(1)";
    rows[i].term = "gap";
    rows[i].gap = std::pow(0.25, i);
  }
  fill_rates(rows);
  CHECK(std::isnan(rows[0].rate));
  CHECK(rows[1].rate == doctest::Approx(2.0));
  CHECK(rows[2].rate == doctest::Approx(2.0));
  std::string csv = rows_csv(rows);
  CHECK(csv == rows_csv(rows));
  CHECK(csv.find("nan") != std::string::npos);
  CHECK(strictly_decreasing({3, 2, 1}));
  CHECK_FALSE(strictly_decreasing({3, 3, 1}));
}
