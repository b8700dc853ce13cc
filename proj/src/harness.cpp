#include "loopfield/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace lf {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> k{
      {"experiment", {"name", "output", "seed"}},
      {"group", {"groups"}},
      {"epsilon", {"values"}},
      {"geometry", {"t", "areas", "lobe_area", "parts", "combination"}},
      {"schedule",
       {"sweeps", "burn_in", "thin", "block", "chains", "hot", "heatbath", "margin", "random_equations"}},
      {"discrete", {"random_loops", "random_strings"}},
      {"tolerance", {"final", "exact"}},
      {"test", {"perturb"}},
  };
  return k;
}

std::vector<std::string> split_list(const std::string& text, const char* seps = ",") {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(seps));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + s + "'");
  }
}

long to_long(const std::string& key, const std::string& s, long lo) {
  try {
    size_t used = 0;
    long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    if (v < lo) throw ConfigError(key + " must be >= " + std::to_string(lo));
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: '" + s + "'");
  }
}

bool to_bool(const std::string& key, const std::string& s) {
  std::string v = boost::to_lower_copy(s);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": not a boolean: '" + s + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& p : split_list(s)) out.push_back(to_double(key, p));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

Combination to_combination(const std::string& s) {
  auto halves = split_list(s, "/");
  if (halves.size() != 2) throw ConfigError("geometry.combination: expected 'a1 a2 a3 a4 a5 / b1 b2'");
  auto a = split_list(halves[0], " \t"), b = split_list(halves[1], " \t");
  if (a.size() != 5 || b.size() != 2) throw ConfigError("geometry.combination: need 5 a-weights and 2 b-weights");
  Combination c;
  double sa = 0, sb = 0;
  for (int i = 0; i < 5; ++i) sa += c.a[i] = to_double("geometry.combination", a[i]);
  for (int i = 0; i < 2; ++i) sb += c.b[i] = to_double("geometry.combination", b[i]);
  if (std::abs(sa - 1) > 1e-12 || std::abs(sb - 1) > 1e-12)
    throw ConfigError("geometry.combination: weights must sum to 1 in each group");
  return c;
}

const Combination kStandard{{0, 0.5, 0, 0.5, 0}, {1, 0}};

SweepOptions sweep_options(const ExperimentConfig& c) {
  SweepOptions o;
  o.eps = c.eps;
  o.final_tol = c.final_tol;
  o.exact_tol = c.exact_tol;
  return o;
}

McOptions mc_options(const ExperimentConfig& c, double eps) {
  McOptions o;
  o.sched = c.sched;
  o.eps = eps;
  o.margin = c.margin;
  o.random_equations = c.random_equations;
  return o;
}

bool wants(const ExperimentConfig& c, const std::string& part) {
  return std::find(c.parts.begin(), c.parts.end(), part) != c.parts.end();
}

void apply_defaults(ExperimentConfig& c) {
  auto def_eps = [&](std::vector<double> v) {
    if (c.eps.empty()) c.eps = std::move(v);
  };
  auto def_groups = [&](std::vector<GroupSpec> g) {
    if (c.groups.empty()) c.groups = std::move(g);
  };
  auto def_parts = [&](std::vector<std::string> p) {
    if (c.parts.empty()) c.parts = std::move(p);
  };
  const GroupSpec u1{Family::U, 1}, u2{Family::U, 2}, su2{Family::SU, 2}, so3{Family::SO, 3};
  const std::string& x = c.experiment;
  if (x == "verify-discrete") {
    def_eps({0.25, 0.125});
  } else if (x == "converge-simple") {
    def_eps({0.25, 0.125, 0.0625});
    def_groups({u1, u2});
  } else if (x == "converge-crossing") {
    def_eps({0.25, 0.125, 0.0625});
    if (c.areas.empty()) c.areas = {0.5, 1.0, 0.5, 1.5};
    def_parts({"crossing", "lobes", "opposed", "corrections"});
  } else if (x == "converge-merger") {
    def_eps({0.25, 0.125, 0.0625});
    if (c.areas.empty()) c.areas = {0.5, 1.0, 1.0};
  } else if (x == "converge-unified") {
    def_eps({0.5});
    def_groups({su2});
  } else if (x == "gauss-lemma") {
    def_eps({0.4, 0.28, 0.2, 0.14, 0.1});
  } else if (x == "degenerate") {
    def_eps({0.125});
  } else if (x == "sample-diagnostics") {
    def_eps({0.5, 1.0});
    def_groups({u1, su2, so3});
    def_parts({"plaquette", "gauge", "statistics", "rectangle", "figure-eight"});
  }
  if (c.combos.empty()) c.combos = {kStandard, Combination{{0.2, 0.2, 0.1, 0.3, 0.2}, {0.7, 0.3}}};
}

void validate(const ExperimentConfig& c) {
  for (double e : c.eps)
    if (!(e > 0) || e > 10) throw ConfigError("epsilon.values: each value must lie in (0, 10]");
  if (c.t <= 0) throw ConfigError("geometry.t must be positive");
  for (double a : c.areas)
    if (a <= 0) throw ConfigError("geometry.areas must be positive");
  const std::string& x = c.experiment;
  if (x == "converge-crossing" && c.areas.size() != 4) throw ConfigError("converge-crossing needs four areas");
  if (x == "converge-merger" && c.areas.size() != 3) throw ConfigError("converge-merger needs three areas (t1 t2 t4)");
  if (x == "converge-unified")
    for (const auto& g : c.groups)
      if (g.family == Family::U) throw ConfigError("converge-unified expects SU or SO groups");
  if (x == "converge-simple")
    for (const auto& g : c.groups)
      if (g.family == Family::U && g.N > 2) throw ConfigError("converge-simple supports U(1), U(2), SU(2), SO(3)");
  if (x == "degenerate" && c.eps.size() != 1) throw ConfigError("degenerate takes a single epsilon");
  static const std::set<std::string> parts{"crossing", "lobes",      "opposed",   "corrections", "plaquette",
                                           "gauge",    "statistics", "rectangle", "figure-eight"};
  for (const auto& p : c.parts)
    if (!parts.count(p)) throw ConfigError("geometry.parts: unknown part '" + p + "'");
  if (c.sched.burn_in < 0 || c.sched.sweeps < 1 || c.sched.block < 1 || c.sched.chains < 1 || c.sched.thin < 1)
    throw ConfigError("schedule: sweeps, block, chains, thin >= 1 and burn_in >= 0");
}

std::string fmtd(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> n{"verify-discrete", "converge-simple", "converge-crossing",
                                          "converge-merger", "converge-unified", "gauss-lemma",
                                          "degenerate",      "sample-diagnostics", "loop-ops"};
  return n;
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("ini syntax: ") + e.what());
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    auto it = allowed_keys().find(section);
    if (it == allowed_keys().end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
      const std::string v = boost::trim_copy(node.data());
      const std::string full = section + "." + key;
      if (full == "experiment.name") c.experiment = v;
      else if (full == "experiment.output") c.output = v;
      else if (full == "experiment.seed") c.seed = std::uint64_t(to_long(full, v, 0));
      else if (full == "group.groups") {
        for (const auto& g : split_list(v, ";,")) {
          try {
            c.groups.push_back(GroupSpec::parse(g));
          } catch (const std::invalid_argument& e) {
            throw ConfigError(full + ": " + e.what());
          }
        }
      } else if (full == "epsilon.values") c.eps = to_doubles(full, v);
      else if (full == "geometry.t") c.t = to_double(full, v);
      else if (full == "geometry.areas") c.areas = to_doubles(full, v);
      else if (full == "geometry.lobe_area") c.lobe_area = to_double(full, v);
      else if (full == "geometry.parts") c.parts = split_list(v);
      else if (full == "geometry.combination") c.combos = {kStandard, to_combination(v)};
      else if (full == "schedule.sweeps") c.sched.sweeps = to_long(full, v, 1);
      else if (full == "schedule.burn_in") c.sched.burn_in = to_long(full, v, 0);
      else if (full == "schedule.thin") c.sched.thin = to_long(full, v, 1);
      else if (full == "schedule.block") c.sched.block = to_long(full, v, 1);
      else if (full == "schedule.chains") c.sched.chains = int(to_long(full, v, 1));
      else if (full == "schedule.hot") c.sched.hot = to_bool(full, v);
      else if (full == "schedule.heatbath") c.sched.heatbath = to_bool(full, v);
      else if (full == "schedule.margin") c.margin = int(to_long(full, v, 1));
      else if (full == "schedule.random_equations") c.random_equations = int(to_long(full, v, 0));
      else if (full == "discrete.random_loops") c.random_loops = int(to_long(full, v, 0));
      else if (full == "discrete.random_strings") c.random_strings = int(to_long(full, v, 0));
      else if (full == "tolerance.final") c.final_tol = to_double(full, v);
      else if (full == "tolerance.exact") c.exact_tol = to_double(full, v);
      else if (full == "test.perturb") {
        try {
          c.perturb = CoefficientOverride::parse(v);
        } catch (const std::exception& e) {
          throw ConfigError(full + ": " + e.what());
        }
      }
    }
  }
  const auto& names = experiment_names();
  if (c.experiment.empty()) throw ConfigError("experiment.name is required");
  if (std::find(names.begin(), names.end(), c.experiment) == names.end())
    throw ConfigError("unknown experiment '" + c.experiment + "'");
  c.sched.seed = c.seed;
  apply_defaults(c);
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path);
  return parse_config(f);
}

SweepReport single_plaquette_check(const GroupSpec& spec, double eps, const Schedule& sched, bool parallel) {
  SweepReport r;
  r.experiment = "sample-diagnostics";
  ActionParams ap{eps, spec};
  LatticeBox box{0, 0, 1, 1};
  Observables obs;
  obs.strings = {LoopString{{plaquette(0, 0)}}};
  McResult res = run_chains(box, ap, obs, sched, parallel);
  const double a = char_coefficient("std", ap);
  const Estimate& e = res.strings[0];
  const double z = e.sigma > 0 ? std::abs(e.mean - a) / e.sigma : 0.0;
  r.clause("single plaquette " + spec.name() + " eps=" + fmtd(eps) + ": <W_p> = a_std within 3 sigma", z <= 3.0,
           fmtd(e.mean) + " +- " + fmtd(e.sigma) + " vs " + fmtd(a) + " (z=" + fmtd(z) + ", acc " +
               fmtd(res.acceptance) + ")");
  Row row;
  row.experiment = r.experiment;
  row.group = spec.name();
  row.epsilon = eps;
  row.triple_id = "plaquette";
  row.term = "W_p";
  row.value = e.mean;
  row.sigma = e.sigma;
  row.residual = e.mean - a;
  row.residual_sigma = e.sigma;
  row.target = a;
  row.gap = std::abs(e.mean - a);
  row.rate = std::nan("");
  r.rows.push_back(row);
  return r;
}

SweepReport gauge_bit_identity(const GroupSpec& spec, double eps, const Schedule& sched) {
  SweepReport r;
  r.experiment = "sample-diagnostics";
  AnnotatedLoop fig = figure_eight_geometry(mc_figure_eight_params(), eps);
  Observables obs;
  obs.strings = {LoopString{{fig.loop}}, LoopString{{rectangle_cells(2, 1, eps).loop}},
                 LoopString{{fig.loop, plaquette(0, 0)}}};
  obs.combos = {{{0, 1.0}, {1, -0.5}, {2, 0.25}}};
  LatticeBox box = LatticeBox::around(obs.strings, 2);
  const ActionParams ap{eps, spec};

  // diagonal maps with entries in {1, i, -1, -i} (signs for SO) act exactly in floating point
  Rng rng(split_seed(sched.seed, 0x9a09e));
  std::vector<std::vector<Mat>> maps(8);
  for (auto& g : maps) {
    for (size_t v = 0; v < box.n_vertices(); ++v) {
      Mat m = Mat::eye(spec.N);
      std::uniform_int_distribution<int> q(0, 3);
      if (spec.family == Family::SO) {
        int flip = q(rng) % spec.N;
        if (q(rng) % 2) {
          m(flip, flip) = -1.0;
          m((flip + 1) % spec.N, (flip + 1) % spec.N) = -1.0;
        }
      } else {
        static const cplx ph[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        cplx det = 1;
        for (int i = 0; i < spec.N; ++i) {
          m(i, i) = ph[q(rng)];
          if (spec.family == Family::SU && i == spec.N - 1) m(i, i) = std::conj(det);
          det *= m(i, i);
        }
      }
      g.push_back(m);
    }
  }
  Schedule plain = sched, gauged = sched;
  gauged.transform = [&maps](const LatticeConfiguration& c) {
    double x = c.links[0](0, 0).real();
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    return gauge_transform(c, maps[(bits >> 20) % maps.size()]);
  };
  McResult a = run_chains(box, ap, obs, plain, false);
  McResult b = run_chains(box, ap, obs, gauged, false);
  bool same = true;
  for (size_t i = 0; i < a.strings.size(); ++i)
    same = same && a.strings[i].mean == b.strings[i].mean && a.strings[i].sigma == b.strings[i].sigma;
  for (size_t i = 0; i < a.combos.size(); ++i)
    same = same && a.combos[i].mean == b.combos[i].mean && a.combos[i].sigma == b.combos[i].sigma;
  r.clause("gauge invariance " + spec.name() + ": estimates bit-identical under per-sample gauge maps", same,
           "W_fig8 " + fmtd(a.strings[0].mean) + " / " + fmtd(b.strings[0].mean));

  // generic Haar gauge maps: invariance to rounding
  Rng r2(split_seed(sched.seed, 0x9a09f));
  LatticeConfiguration c = init_config(box, ap, true, r2);
  std::vector<Mat> g(box.n_vertices());
  for (auto& m : g) m = haar_sample(spec, r2);
  LatticeConfiguration cg = gauge_transform(c, g);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    Loop l;
    while (l.trivial()) l = random_loop(r2, 12 + k % 20, 2);
    Word w;
    for (Bond bd : l.word()) w.push_back({bd.x + box.x0 + box.W / 2, bd.y + box.y0 + box.H / 2, bd.dir});
    LoopString s{{make_loop(w)}};
    worst = std::max(worst, std::abs(wilson_value(c, s) - wilson_value(cg, s)));
  }
  r.clause("gauge invariance " + spec.name() + ": 100 random loops under Haar gauge maps", worst < 1e-12,
           "max |dW| = " + fmtd(worst));
  return r;
}

SweepReport sampler_statistics(double eps, long samples, std::uint64_t seed) {
  SweepReport r;
  r.experiment = "sample-diagnostics";
  ChiSquareResult h = plaquette_histogram_test(eps, 20, samples, seed);
  r.clause("U(1) plaquette-angle histogram chi2 at 1%", h.p_value > 0.01,
           "chi2=" + fmtd(h.statistic) + " dof=" + std::to_string(h.dof) + " p=" + fmtd(h.p_value));
  ChiSquareResult d = detailed_balance_test(eps, 8, samples, seed + 1);
  r.clause("Metropolis detailed balance chi2 at 1%", d.p_value > 0.01,
           "chi2=" + fmtd(d.statistic) + " dof=" + std::to_string(d.dof) + " p=" + fmtd(d.p_value));
  for (auto [nm, res] : {std::pair{"histogram", h}, {"detailed-balance", d}}) {
    Row row;
    row.experiment = r.experiment;
    row.group = "U(1)";
    row.epsilon = eps;
    row.triple_id = nm;
    row.term = "chi2";
    row.value = res.statistic;
    row.target = res.dof;
    row.gap = res.p_value;
    row.rate = std::nan("");
    r.rows.push_back(row);
  }
  return r;
}

SweepReport gauss_lemma_report(const std::vector<double>& eps_u2, const std::vector<double>& eps_j1) {
  SweepReport r;
  r.experiment = "gauss-lemma";
  const GroupSpec u2{Family::U, 2};
  std::vector<TestFunction> fs;
  fs.push_back({"1 - Re tr Q",
                [](const GroupElement& q) { return 1.0 - trace_normalized(q).real(); },
                [](const std::vector<double>& eig) {
                  double s = 0;
                  for (double th : eig) s += std::cos(th);
                  return 1.0 - s / double(eig.size());
                },
                std::nullopt});
  fs.push_back({"|tr Q|^2 - Re tr Q^2",
                [](const GroupElement& q) {
                  cplx t = trace_normalized(q);
                  return -trace_normalized(multiply(q, q)).real() + std::norm(t);
                },
                [](const std::vector<double>& eig) {
                  double c2 = 0;
                  cplx t = 0;
                  for (double th : eig) {
                    c2 += std::cos(2 * th);
                    t += std::polar(1.0, th);
                  }
                  const double n = double(eig.size());
                  return -c2 / n + std::norm(t / n);
                },
                std::nullopt});
  for (const TestFunction& f : fs) {
    GaussLemmaReport g = gaussian_lemma_check(u2, f, eps_u2);
    const bool ok = g.slope >= 3.5 && g.slope <= 4.5;
    std::string errs;
    for (double e : g.error) errs += fmtd(e) + " ";
    r.clause("U(2) f = " + f.name + ": log-log slope in [3.5, 4.5]", ok, "slope " + fmtd(g.slope) + "; errors " + errs);
    for (size_t i = 0; i < g.eps.size(); ++i) {
      Row row;
      row.experiment = r.experiment;
      row.group = u2.name();
      row.epsilon = g.eps[i];
      row.triple_id = f.name;
      row.term = "int f S - eps^2/2 Lf(I)";
      row.value = g.integral[i];
      row.target = g.target[i];
      row.gap = g.error[i];
      row.rate = std::nan("");
      r.rows.push_back(row);
    }
  }
  J1Report j = lemma_J1_check(0.3, 1.1, 1.0, eps_j1);
  std::string gaps;
  for (double g : j.gap) gaps += fmtd(g) + " ";
  r.clause("U(1) convergence of the heat-kernel derivative pairing: gap decreasing", strictly_decreasing(j.gap), gaps);
  for (size_t i = 0; i < j.eps.size(); ++i) {
    Row row;
    row.experiment = r.experiment;
    row.group = "U(1)";
    row.epsilon = j.eps[i];
    row.triple_id = "a1=0.3,a2=1.1,t=1";
    row.term = "J1";
    row.value = std::abs(j.lhs[i]);
    row.target = std::abs(j.rhs[i]);
    row.gap = j.gap[i];
    row.rate = std::nan("");
    r.rows.push_back(row);
  }
  J1Report j0 = lemma_J1_check(0.0, 0.0, 1.0, eps_j1);
  double m0 = 0;
  for (size_t i = 0; i < j0.eps.size(); ++i) m0 = std::max({m0, std::abs(j0.lhs[i]), std::abs(j0.rhs[i])});
  r.clause("U(1) pairing at a1 = a2 = I vanishes", m0 < 1e-10, fmtd(m0));
  auto [lhs, rhs] = lemma_J_check(0.3, 1.1, eps_j1.back());
  r.clause("U(1) character pairing limit (reported)", true,
           "|lhs - rhs| = " + fmtd(std::abs(lhs - rhs)) + " at eps=" + fmtd(eps_j1.back()));
  fill_rates(r.rows);
  return r;
}

SweepReport run_experiment(const ExperimentConfig& c) {
  const std::string& x = c.experiment;
  SweepReport r;
  r.experiment = x;
  if (x == "loop-ops") {
    r = loop_ops_report();
  } else if (x == "verify-discrete") {
    DiscreteOptions o;
    o.eps = c.eps;
    o.random_loops = c.random_loops;
    o.random_strings = c.random_strings;
    o.seed = c.seed;
    o.tol = c.exact_tol;
    o.perturb = c.perturb;
    r = verify_discrete(o);
  } else if (x == "converge-simple") {
    for (const auto& g : c.groups) r.append(convergence_simple(g, c.t, sweep_options(c)));
  } else if (x == "converge-crossing") {
    const std::array<double, 4> t{c.areas[0], c.areas[1], c.areas[2], c.areas[3]};
    if (wants(c, "crossing")) r.append(convergence_crossing(t, sweep_options(c), c.combos));
    if (wants(c, "lobes")) r.append(convergence_square_lobes(c.lobe_area, c.lobe_area, sweep_options(c)));
    if (wants(c, "opposed")) r.append(convergence_opposed(c.lobe_area, c.lobe_area, sweep_options(c)));
    if (wants(c, "corrections")) r.append(correction_identities(t, sweep_options(c)));
  } else if (x == "converge-merger") {
    r.append(convergence_merger({c.areas[0], c.areas[1], c.areas[2]}, sweep_options(c), c.combos));
  } else if (x == "converge-unified") {
    for (const auto& g : c.groups)
      for (double e : c.eps) r.append(convergence_unified(g, mc_options(c, e)));
  } else if (x == "gauss-lemma") {
    r = gauss_lemma_report(c.eps, {0.4, 0.2, 0.1});
  } else if (x == "degenerate") {
    r.append(degenerate_checks(DegenerateKind::ThreeFace, c.eps[0]));
    r.append(degenerate_checks(DegenerateKind::Unbounded, c.eps[0]));
  } else if (x == "sample-diagnostics") {
    Schedule small = c.sched;
    small.sweeps = std::max<long>(1000, c.sched.sweeps / 5);
    if (wants(c, "plaquette"))
      for (const auto& g : c.groups)
        for (double e : c.eps) r.append(single_plaquette_check(g, e, small, true));
    if (wants(c, "gauge")) {
      Schedule tiny = c.sched;
      tiny.sweeps = std::max<long>(200, c.sched.sweeps / 50);
      tiny.chains = 1;
      for (const auto& g : c.groups) r.append(gauge_bit_identity(g, c.eps[0], tiny));
    }
    if (wants(c, "statistics")) r.append(sampler_statistics(c.eps[0], 200000, c.seed));
    if (wants(c, "rectangle")) r.append(mc_equation_check({Family::SU, 2}, "rectangle", mc_options(c, 0.5)));
    if (wants(c, "figure-eight")) r.append(mc_equation_check({Family::SO, 3}, "figure-eight", mc_options(c, 0.5)));
  }
  r.experiment = x;
  for (auto& row : r.rows) row.experiment = x;
  return r;
}

int run_config_file(const std::string& path, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  SweepReport r;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    r = run_experiment(cfg);
  } catch (const CertificationError& e) {
    err << "certification failure: " << e.what() << "\n";
    return 3;
  } catch (const LoopError& e) {
    err << "geometry error: " << e.what() << "\n";
    return 2;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!cfg.output.empty()) {
    namespace fs = std::filesystem;
    fs::path p(cfg.output);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream csv(cfg.output + ".csv", std::ios::binary), js(cfg.output + ".json", std::ios::binary);
    csv << rows_csv(r.rows);
    js << report_json(r) << "\n";
    if (!csv || !js) {
      err << "cannot write outputs under " << cfg.output << "\n";
      return 1;
    }
  }
  size_t ok = 0;
  for (const Clause& c : r.clauses) {
    ok += c.passed;
    out << (c.passed ? "PASS " : "FAIL ") << c.name << " : " << c.detail << "\n";
  }
  out << (r.passed() ? "PASS " : "FAIL ") << cfg.experiment << " (" << ok << "/" << r.clauses.size()
      << " clauses, " << fmtd(secs) << " s)\n";
  return r.passed() ? 0 : 1;
}

}  // namespace lf
