#include "loopfield/mm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lf {

namespace {

const GroupSpec kU1{Family::U, 1};
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string eps_str(double eps) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + sci(v[i]);
  return s;
}

/** Copy of g with continuum areas placed on the faces holding the reference cells (t <= 0 skipped). */
PlanarLoopGraph with_areas(PlanarLoopGraph g, const std::array<Point, 4>& cells, const std::vector<double>& t) {
  for (int k = 0; k < 4; ++k) {
    if (t[k] <= 0) continue;
    int f = g.face_of_cell(cells[k]);
    if (f == 0) throw LoopError("reference cell lies in the unbounded face");
    g.faces[f].area = t[k];
  }
  g.eps = 0;
  return g;
}

double face_deriv(const PlanarLoopGraph& g, const std::array<Point, 4>& cells, int k, DerivBackend be) {
  int f = g.face_of_cell(cells[k]);
  if (f == 0) return 0.0;
  return area_derivative(g, f, be);
}

/** (d1 - d2 + d3 - d4) E W over the four crossing faces; unbounded faces contribute 0. */
double alternating_sum(const PlanarLoopGraph& g, const std::array<Point, 4>& cells, DerivBackend be) {
  static const double sgn[4] = {1, -1, 1, -1};
  double s = 0;
  for (int k = 0; k < 4; ++k) s += sgn[k] * face_deriv(g, cells, k, be);
  return s;
}

double string_continuum(const LoopString& s, double eps, const std::array<Point, 4>& cells,
                        const std::vector<double>& t) {
  return u1_expectation_continuum(with_areas(build_graph(s, eps), cells, t));
}

size_t middle(const std::vector<size_t>& v) { return v.at(v.size() / 2); }

struct LocationData {
  double def = 0, residual = 0;
  Equation eq;
};

LocationData exact_at(const GroupSpec& g, const LoopString& s, size_t comp, size_t x, double eps, EqKind kind,
                      const U1Exact& u) {
  LocationData d;
  d.eq = assemble({g, s, comp, x, eps, kind, {}});
  EquationReport rep = evaluate_exact(d.eq, u);
  d.def = rep.family_sum(d.eq, "deformation");
  d.residual = rep.residual;
  return d;
}

std::vector<std::pair<LoopString, double>> residual_terms(const Equation& eq, double w) {
  std::vector<std::pair<LoopString, double>> out{{eq.spec.subject, w * eq.lhs_coef}};
  for (const Term& t : eq.terms) out.push_back({t.s, -w * t.coef});
  return out;
}

std::vector<std::pair<LoopString, double>> family_terms(const Equation& eq, const std::string& fam, double w) {
  std::vector<std::pair<LoopString, double>> out;
  for (const Term& t : eq.terms)
    if (t.family == fam) out.push_back({t.s, w * t.coef});
  return out;
}

void extend(std::vector<std::pair<LoopString, double>>& a, const std::vector<std::pair<LoopString, double>>& b) {
  a.insert(a.end(), b.begin(), b.end());
}

Row make_row(const std::string& exp, const std::string& group, double eps, const std::string& id,
             const std::string& term) {
  Row r;
  r.experiment = exp;
  r.group = group;
  r.epsilon = eps;
  r.triple_id = id;
  r.term = term;
  r.rate = kNaN;
  return r;
}

}  // namespace

double CoefficientOverride::get(const std::string& family) const {
  auto it = factor.find(family);
  return it == factor.end() ? 1.0 : it->second;
}

const std::vector<std::string>& coefficient_families() {
  static const std::vector<std::string> f{"lhs", "deformation", "splitting", "merger", "twist", "expansion"};
  return f;
}

CoefficientOverride CoefficientOverride::parse(const std::string& text) {
  CoefficientOverride o;
  if (text.empty()) return o;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto c = item.find(':');
    if (c == std::string::npos) throw std::invalid_argument("override needs family:factor, got '" + item + "'");
    std::string fam = item.substr(0, c);
    const auto& fams = coefficient_families();
    if (std::find(fams.begin(), fams.end(), fam) == fams.end())
      throw std::invalid_argument("unknown coefficient family '" + fam + "'");
    size_t used = 0;
    double v = std::stod(item.substr(c + 1), &used);
    if (used != item.size() - c - 1 || !std::isfinite(v)) throw std::invalid_argument("bad factor in '" + item + "'");
    o.factor[fam] = v;
  }
  return o;
}

size_t Equation::count(const std::string& tag) const {
  return size_t(std::count_if(terms.begin(), terms.end(), [&](const Term& t) { return t.tag == tag; }));
}

double Equation::coef_of(const std::string& tag) const {
  for (const Term& t : terms)
    if (t.tag == tag) return t.coef;
  return 0.0;
}

Equation assemble(const EquationSpec& sp) {
  if (sp.component >= sp.subject.loops.size()) throw LoopError("component out of range");
  if (sp.kind != EqKind::String && sp.subject.loops.size() != 1)
    throw LoopError("single-loop equation needs a one-component subject");
  const Loop& l = sp.subject.loops[sp.component];
  if (sp.x >= l.size()) throw LoopError("location out of range");
  if (sp.eps <= 0) throw std::invalid_argument("eps must be positive");
  const Bond b = l[sp.x];
  const GroupSpec& g = sp.group;
  const double N = g.N, beta = g.beta(), gamma = g.gamma();
  const double tau = (2.0 - beta) / (beta * N);
  const double d = 1.0 / (2.0 * sp.eps * sp.eps);
  const CoefficientOverride& f = sp.perturb;

  Equation eq;
  eq.spec = sp;
  eq.b = b;
  auto with = [&](const std::vector<Loop>& ls) { return replace_component(sp.subject, sp.component, ls); };
  const auto occ_p = occurrences(l, b), occ_m = occurrences(l, b.inverse());
  const double n_plus = double(occ_p.size()) - 1.0, n_minus = double(occ_m.size());
  eq.lhs_coef = (1.0 - tau - gamma * (1.0 + n_plus - n_minus) / (N * N)) * f.get("lhs");

  const DeformationSets ds = deformation_sets(l, b, sp.x);
  for (const Loop& m : ds.minus) eq.terms.push_back({"D-", "deformation", d * f.get("deformation"), with({m})});
  for (const Loop& m : ds.plus) eq.terms.push_back({"D+", "deformation", -d * f.get("deformation"), with({m})});

  for (size_t y : occ_p) {
    if (y == sp.x) continue;
    eq.terms.push_back({"S+", "splitting", -1.0 * f.get("splitting"), with(split_positive(l, b, sp.x, y).loops)});
  }
  for (size_t y : occ_m)
    eq.terms.push_back({"S-", "splitting", 1.0 * f.get("splitting"), with(split_negative(l, b, sp.x, y).loops)});

  if (tau != 0.0) {
    for (size_t y : occ_p) {
      if (y == sp.x) continue;
      eq.terms.push_back({"T-", "twist", tau * f.get("twist"), with({twist_negative(l, b, sp.x, y)})});
    }
    for (size_t y : occ_m)
      eq.terms.push_back({"T+", "twist", -tau * f.get("twist"), with({twist_positive(l, b, sp.x, y)})});
  }

  if (gamma != 0.0) {
    const ExpansionSets es = expansion_sets(l, b, sp.x);
    for (const LoopString& s : es.plus)
      eq.terms.push_back({"E+", "expansion", -gamma * d * f.get("expansion"), with(s.loops)});
    for (const LoopString& s : es.minus)
      eq.terms.push_back({"E-", "expansion", gamma * d * f.get("expansion"), with(s.loops)});
  }

  for (size_t j = 0; j < sp.subject.loops.size(); ++j) {
    if (j == sp.component) continue;
    const Loop& lj = sp.subject.loops[j];
    auto merged = [&](const Loop& m) {
      LoopString out;
      for (size_t k = 0; k < sp.subject.loops.size(); ++k) {
        if (k == j) continue;
        if (k == sp.component) {
          if (!m.trivial()) out.loops.push_back(m);
        } else {
          out.loops.push_back(sp.subject.loops[k]);
        }
      }
      return out;
    };
    auto mp = occurrences(lj, b), mm = occurrences(lj, b.inverse());
    if ((!mp.empty() || !mm.empty()) && g.family != Family::U)
      throw LoopError("merger terms are only available for U(N) strings");
    for (size_t y : mp)
      eq.terms.push_back({"M+", "merger", -f.get("merger") / (N * N), merged(merge_positive(l, lj, b, sp.x, y))});
    for (size_t y : mm)
      eq.terms.push_back({"M-", "merger", f.get("merger") / (N * N), merged(merge_negative(l, lj, b, sp.x, y))});
  }
  return eq;
}

double EquationReport::family_sum(const Equation& eq, const std::string& family) const {
  double s = 0;
  for (size_t i = 0; i < eq.terms.size(); ++i)
    if (eq.terms[i].family == family) s += eq.terms[i].coef * values[i];
  return s;
}

EquationReport evaluate_exact(const Equation& eq, const U1Exact& backend) {
  if (!(eq.spec.group == kU1)) throw std::invalid_argument("exact backend supports U(1) only");
  EquationReport r;
  r.lhs = eq.lhs_coef * backend.value(eq.spec.subject);
  for (const Term& t : eq.terms) {
    double v = backend.value(t.s);
    r.values.push_back(v);
    r.sigmas.push_back(0.0);
    r.rhs += t.coef * v;
  }
  r.residual = r.lhs - r.rhs;
  return r;
}

size_t McPlan::add_string(const LoopString& s) {
  auto it = index_.find(s);
  if (it != index_.end()) return it->second;
  size_t i = obs_.strings.size();
  obs_.strings.push_back(s);
  index_[s] = i;
  return i;
}

size_t McPlan::add_combo(const std::vector<std::pair<LoopString, double>>& terms) {
  std::map<size_t, double> w;
  for (const auto& [s, c] : terms) w[add_string(s)] += c;
  std::vector<std::pair<size_t, double>> combo;
  for (const auto& [i, c] : w)
    if (c != 0.0) combo.push_back({i, c});
  obs_.combos.push_back(combo);
  return obs_.combos.size() - 1;
}

size_t McPlan::add_residual(const Equation& eq) { return add_combo(residual_terms(eq, 1.0)); }

EquationReport report_mc(const Equation& eq, const McPlan& plan, const McResult& res, size_t residual_combo) {
  const auto& strings = plan.observables().strings;
  auto idx = [&](const LoopString& s) {
    auto it = std::find(strings.begin(), strings.end(), s);
    if (it == strings.end()) throw std::out_of_range("string not in plan");
    return size_t(it - strings.begin());
  };
  EquationReport r;
  const Estimate& e0 = res.strings[idx(eq.spec.subject)];
  r.lhs = eq.lhs_coef * e0.mean;
  r.lhs_sigma = std::abs(eq.lhs_coef) * e0.sigma;
  double var = 0;
  for (const Term& t : eq.terms) {
    const Estimate& e = res.strings[idx(t.s)];
    r.values.push_back(e.mean);
    r.sigmas.push_back(e.sigma);
    r.rhs += t.coef * e.mean;
    var += t.coef * t.coef * e.sigma * e.sigma;
  }
  r.rhs_sigma = std::sqrt(var);
  r.residual = res.combos[residual_combo].mean;
  r.residual_sigma = res.combos[residual_combo].sigma;
  return r;
}

void SweepReport::clause(const std::string& name, bool ok, const std::string& detail) {
  clauses.push_back({name, ok, detail});
}

bool SweepReport::passed() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const Clause& c) { return c.passed; });
}

void SweepReport::append(const SweepReport& o) {
  rows.insert(rows.end(), o.rows.begin(), o.rows.end());
  clauses.insert(clauses.end(), o.clauses.begin(), o.clauses.end());
}

void fill_rates(std::vector<Row>& rows) {
  std::map<std::tuple<std::string, std::string, std::string, std::string>, double> last;
  for (Row& r : rows) {
    auto key = std::make_tuple(r.experiment, r.group, r.triple_id, r.term);
    auto it = last.find(key);
    r.rate = (it != last.end() && it->second > 0 && r.gap > 0) ? std::log2(it->second / r.gap) : kNaN;
    last[key] = r.gap;
  }
}

std::string rows_csv(const std::vector<Row>& rows) {
  std::string out = "experiment,group,epsilon,triple_id,term,value,sigma,residual,residual_sigma,target,gap,rate\n";
  for (const Row& r : rows) {
    out += r.experiment + "," + r.group + "," + fmt(r.epsilon) + "," + r.triple_id + "," + r.term + "," +
           fmt(r.value) + "," + fmt(r.sigma) + "," + fmt(r.residual) + "," + fmt(r.residual_sigma) + "," +
           fmt(r.target) + "," + fmt(r.gap) + "," + fmt(r.rate) + "\n";
  }
  return out;
}

std::string report_json(const SweepReport& r) {
  nlohmann::ordered_json j;
  j["experiment"] = r.experiment;
  j["passed"] = r.passed();
  j["clauses"] = nlohmann::ordered_json::array();
  for (const Clause& c : r.clauses) j["clauses"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["rows"] = nlohmann::ordered_json::array();
  for (const Row& x : r.rows) {
    nlohmann::ordered_json o;
    o["experiment"] = x.experiment;
    o["group"] = x.group;
    o["epsilon"] = x.epsilon;
    o["triple_id"] = x.triple_id;
    o["term"] = x.term;
    o["value"] = x.value;
    o["sigma"] = x.sigma;
    o["residual"] = x.residual;
    o["residual_sigma"] = x.residual_sigma;
    o["target"] = x.target;
    o["gap"] = x.gap;
    o["rate"] = x.rate;
    j["rows"].push_back(o);
  }
  return j.dump(1);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return !v.empty();
}

// ---------------------------------------------------------------------------------------------
// simple loops

SweepReport convergence_simple(const GroupSpec& spec, double t, const SweepOptions& opt) {
  SweepReport r;
  r.experiment = "converge-simple";
  const std::string gname = spec.name();
  const double c = casimir_standard(spec);
  const double target = -c * std::exp(c * t / 2.0);
  std::vector<double> gaps;
  double worst_cancel = 0, worst_exact = 0;
  for (double eps : opt.eps) {
    const long k = plaquette_count(t, eps);
    if (k < 2) throw LoopError("geometry infeasible: rectangle needs two plaquettes");
    const ActionParams ap{eps, spec};
    const double a = char_coefficient("std", ap);
    const double kap = ap.kappa();
    auto sums = integrate_class(spec, 2, [&](const std::vector<double>& eig, std::vector<double>& out) {
      double w = std::exp(-kap * re_tr_one_minus(spec, eig));
      double tr2 = 0;
      for (double th : eig) tr2 += std::cos(2.0 * th);
      out[0] = w;
      out[1] = w * tr2 / double(eig.size());
    }, 1e-13);
    const double m2 = sums[1] / sums[0];
    const double in_neg = std::pow(a, double(k - 1)), out_neg = std::pow(a, double(k + 1));
    const double in_pos = in_neg * m2, out_pos = std::pow(a, double(k + 1));
    const double ew = std::pow(a, double(k));
    const double D = (in_neg + out_neg - in_pos - out_pos) / (2.0 * eps * eps);
    double cancel = std::abs(out_neg - out_pos);

    if (spec == kU1) {
      // the same quantities from actual deformation loops
      AnnotatedLoop rect = rectangle_loop(t, eps);
      U1Exact u(eps);
      Equation eq = assemble({spec, LoopString{{rect.loop}}, 0, 0, eps, EqKind::Single, {}});
      EquationReport rep = evaluate_exact(eq, u);
      std::vector<double> neg, pos;
      for (size_t i = 0; i < eq.terms.size(); ++i)
        (eq.terms[i].tag == "D-" ? neg : pos).push_back(rep.values[i]);
      auto closest = [&](const std::vector<double>& v) {
        return *std::min_element(v.begin(), v.end(), [&](double p, double q) {
          return std::abs(p - out_neg) < std::abs(q - out_neg);
        });
      };
      cancel = std::max(cancel, std::abs(closest(neg) - closest(pos)));
      double dl = rep.family_sum(eq, "deformation");
      worst_exact = std::max(worst_exact, std::abs(dl - D));
      worst_exact = std::max(worst_exact, std::abs(rep.residual));
      r.clause("term count (" + gname + ", eps=" + eps_str(eps) + ")",
               eq.terms.size() == 4 && eq.count("D-") == 2 && eq.count("D+") == 2,
               std::to_string(eq.terms.size()) + " terms");
    }
    worst_exact = std::max(worst_exact, std::abs(ew - D) * (spec.family == Family::U ? 1.0 : 0.0));
    worst_cancel = std::max(worst_cancel, cancel);
    const double gap = std::abs(D - target);
    gaps.push_back(gap);
    Row row = make_row(r.experiment, gname, eps, "rect", "deformation");
    row.value = D;
    row.residual = ew - D;
    row.target = target;
    row.gap = gap;
    r.rows.push_back(row);
    Row oc = make_row(r.experiment, gname, eps, "rect", "outer-cancellation");
    oc.value = out_neg - out_pos;
    oc.gap = cancel;
    r.rows.push_back(oc);
  }
  r.clause("gap strictly decreasing (" + gname + ")", strictly_decreasing(gaps), join(gaps));
  r.clause("final gap < " + sci(opt.final_tol) + " (" + gname + ")", gaps.back() < opt.final_tol, sci(gaps.back()));
  r.clause("outer cancellation (" + gname + ")", worst_cancel <= 1e-12, sci(worst_cancel));
  if (spec.family == Family::U)
    r.clause("exact discrete identity (" + gname + ")", worst_exact < opt.exact_tol, sci(worst_exact));
  fill_rates(r.rows);
  return r;
}

// ---------------------------------------------------------------------------------------------
// crossings

namespace {

struct CrossingEval {
  std::map<size_t, double> def;
  double max_residual = 0;
  double ew = 0;
};

CrossingEval evaluate_locations(const AnnotatedLoop& fig, const U1Exact& u, const std::set<size_t>& locs) {
  CrossingEval ce;
  const LoopString s{{fig.loop}};
  ce.ew = u.value(s);
  for (size_t x : locs) {
    LocationData d = exact_at(kU1, s, 0, x, fig.eps, EqKind::Single, u);
    ce.def[x] = d.def;
    ce.max_residual = std::max(ce.max_residual, std::abs(d.residual));
  }
  return ce;
}

std::set<size_t> annotated_locations(const EdgeAnnotation& a) {
  std::set<size_t> s;
  for (const auto* v : {&a.e, &a.e_bar, &a.e1, &a.e2, &a.e3inv, &a.e4inv}) s.insert(v->begin(), v->end());
  return s;
}

/** Shared triple sweep: phi = sign * (def(x) - def(x1)/2 - def(x2)/2) against target. */
void triple_rows(SweepReport& r, const std::string& label, const AnnotatedLoop& fig, const CrossingEval& ce,
                 double target, double sign, double& max_gap, double& lo, double& hi) {
  auto triples = compatible_triples(fig.loop, fig.ann);
  max_gap = 0;
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  const size_t stride = std::max<size_t>(1, triples.size() / 32);
  for (size_t i = 0; i < triples.size(); ++i) {
    const Triple& tr = triples[i];
    double phi = sign * (ce.def.at(tr.x) - 0.5 * ce.def.at(tr.x1) - 0.5 * ce.def.at(tr.x2));
    double gap = std::abs(phi - target);
    max_gap = std::max(max_gap, gap);
    lo = std::min(lo, phi);
    hi = std::max(hi, phi);
    if (i % stride == 0) {
      Row row = make_row(r.experiment, "U(1)", fig.eps,
                         label + ":t" + std::to_string(tr.type) + ":" + std::to_string(tr.x) + "-" +
                             std::to_string(tr.x1) + "-" + std::to_string(tr.x2),
                         "combination");
      row.value = phi;
      row.target = target;
      row.gap = gap;
      r.rows.push_back(row);
    }
  }
  Row row = make_row(r.experiment, "U(1)", fig.eps, label + ":all", "combination-max");
  row.value = double(triples.size());
  row.residual = ce.max_residual;
  row.target = target;
  row.gap = max_gap;
  r.rows.push_back(row);
}

}  // namespace

SweepReport convergence_crossing(const std::array<double, 4>& t, const SweepOptions& opt,
                                 const std::vector<Combination>& combos) {
  SweepReport r;
  r.experiment = "converge-crossing";
  const std::vector<double> tv(t.begin(), t.end());
  std::vector<double> gaps, spreads;
  std::vector<std::vector<double>> cgaps(combos.size());
  std::vector<double> cdiff(combos.size(), 0.0);
  double worst_res = 0, worst_cont = 0, worst_fd = 0, worst_area = 0;
  for (double eps : opt.eps) {
    AnnotatedLoop fig = figure_eight(t, eps);
    U1Exact u(eps);
    CrossingEval ce = evaluate_locations(fig, u, annotated_locations(fig.ann));
    worst_res = std::max(worst_res, ce.max_residual);
    for (int k = 0; k < 4; ++k) worst_area = std::max(worst_area, std::abs(eps * eps * fig.cells[k] - t[k]) / eps);

    PlanarLoopGraph gc = with_areas(build_graph(fig.loop, eps), fig.face_cells, tv);
    const double dsum = alternating_sum(gc, fig.face_cells, DerivBackend::Analytic);
    const double dsum_fd = alternating_sum(gc, fig.face_cells, DerivBackend::FiniteDifference);
    const size_t x0 = fig.ann.e.at(0), y0 = fig.ann.e_bar.at(0);
    const LoopString split = split_positive(fig.loop, fig.loop[x0], x0, y0);
    const double s_c = string_continuum(split, eps, fig.face_cells, tv);
    worst_cont = std::max(worst_cont, std::abs(dsum - s_c));
    worst_fd = std::max(worst_fd, std::abs(dsum_fd - dsum));

    double max_gap, lo, hi;
    triple_rows(r, "fig8", fig, ce, dsum, 1.0, max_gap, lo, hi);
    gaps.push_back(max_gap);
    spreads.push_back(hi - lo);
    const double phi_std = ce.def.at(x0) - 0.5 * ce.def.at(fig.ann.e1.at(0)) - 0.5 * ce.def.at(fig.ann.e3inv.at(0));

    for (size_t c = 0; c < combos.size(); ++c) {
      const Combination& cb = combos[c];
      double phi = cb.b[0] * ce.def.at(x0) + cb.b[1] * ce.def.at(y0) - cb.a[0] * ce.ew -
                   cb.a[1] * ce.def.at(middle(fig.ann.e1)) - cb.a[2] * ce.def.at(middle(fig.ann.e2)) -
                   cb.a[3] * ce.def.at(middle(fig.ann.e3inv)) - cb.a[4] * ce.def.at(middle(fig.ann.e4inv));
      double gap = std::abs(phi - dsum);
      cgaps[c].push_back(gap);
      cdiff[c] = std::abs(phi - phi_std);
      Row row = make_row(r.experiment, "U(1)", eps, "fig8:ab" + std::to_string(c), "combination");
      row.value = phi;
      row.target = dsum;
      row.gap = gap;
      r.rows.push_back(row);
    }
    Row sr = make_row(r.experiment, "U(1)", eps, "fig8:split", "splitting");
    sr.value = u.value(split);
    sr.target = s_c;
    sr.gap = std::abs(sr.value - s_c);
    r.rows.push_back(sr);
  }
  r.clause("exact discrete identity at all locations", worst_res < opt.exact_tol, sci(worst_res));
  r.clause("lattice areas within 2 eps", worst_area <= 2.0, "max |t(eps)-t|/eps = " + sci(worst_area));
  r.clause("continuum identity (d1-d2+d3-d4)EW = EW_l1 W_l2", worst_cont < 1e-8, sci(worst_cont));
  r.clause("finite-difference vs analytic derivatives", worst_fd < 1e-6, sci(worst_fd));
  r.clause("gap strictly decreasing", strictly_decreasing(gaps), join(gaps));
  r.clause("final gap < " + sci(opt.final_tol), gaps.back() < opt.final_tol, sci(gaps.back()));
  r.clause("triple independence at finest eps", spreads.back() < opt.final_tol, "spread " + sci(spreads.back()));
  for (size_t c = 0; c < combos.size(); ++c) {
    const std::string nm = "combination ab" + std::to_string(c);
    r.clause(nm + " gap strictly decreasing", strictly_decreasing(cgaps[c]), join(cgaps[c]));
    r.clause(nm + " final gap < " + sci(opt.final_tol), cgaps[c].back() < opt.final_tol, sci(cgaps[c].back()));
    r.clause(nm + " same limit as standard combination", cdiff[c] < opt.final_tol, sci(cdiff[c]));
  }
  fill_rates(r.rows);
  return r;
}

SweepReport convergence_square_lobes(double t_left, double t_right, const SweepOptions& opt) {
  SweepReport r;
  r.experiment = "converge-crossing";
  const std::vector<double> tv{0.0, t_left, 0.0, t_right};
  std::vector<double> gaps, spreads;
  double worst_res = 0, worst_cont = 0;
  for (double eps : opt.eps) {
    AnnotatedLoop fig = square_lobes(t_left, t_right, eps);
    U1Exact u(eps);
    CrossingEval ce = evaluate_locations(fig, u, annotated_locations(fig.ann));
    worst_res = std::max(worst_res, ce.max_residual);
    PlanarLoopGraph gc = with_areas(build_graph(fig.loop, eps), fig.face_cells, tv);
    const double dsum = alternating_sum(gc, fig.face_cells, DerivBackend::Analytic);
    const size_t x0 = fig.ann.e.at(0), y0 = fig.ann.e_bar.at(0);
    const double s_c = string_continuum(split_positive(fig.loop, fig.loop[x0], x0, y0), eps, fig.face_cells, tv);
    worst_cont = std::max(worst_cont, std::abs(dsum - s_c));
    double max_gap, lo, hi;
    triple_rows(r, "lobes", fig, ce, dsum, 1.0, max_gap, lo, hi);
    gaps.push_back(max_gap);
    spreads.push_back(hi - lo);
  }
  r.clause("square lobes: exact discrete identity", worst_res < opt.exact_tol, sci(worst_res));
  r.clause("square lobes: continuum identity", worst_cont < 1e-8, sci(worst_cont));
  r.clause("square lobes: gap strictly decreasing", strictly_decreasing(gaps), join(gaps));
  r.clause("square lobes: final gap < " + sci(opt.final_tol), gaps.back() < opt.final_tol, sci(gaps.back()));
  r.clause("square lobes: triple independence", spreads.back() < opt.final_tol, sci(spreads.back()));
  fill_rates(r.rows);
  return r;
}

SweepReport correction_identities(const std::array<double, 4>& t, const SweepOptions& opt) {
  SweepReport r;
  r.experiment = "converge-crossing";
  const std::vector<double> tv(t.begin(), t.end());
  std::vector<double> g_e, g_1, g_3;
  bool continuum_done = false;
  for (double eps : opt.eps) {
    AnnotatedLoop fig = figure_eight(t, eps);
    PlanarLoopGraph gc = with_areas(build_graph(fig.loop, eps), fig.face_cells, tv);
    CrossingFaces cf = crossing_faces(gc, fig.face_cells);
    const auto d = [&](int k) { return face_deriv(gc, fig.face_cells, k, DerivBackend::Analytic); };
    const double ew = u1_expectation_continuum(gc);
    const size_t x0 = fig.ann.e.at(0), y0 = fig.ann.e_bar.at(0);
    const double s_c = string_continuum(split_positive(fig.loop, fig.loop[x0], x0, y0), eps, fig.face_cells, tv);
    const double dsum = d(0) - d(1) + d(2) - d(3);
    std::array<double, 4> im{};
    for (int m = 1; m <= 4; ++m) im[m - 1] = correction_term_Im(gc, cf, m);
    const double lim_e = 2 * dsum + im[0] + im[2];
    const double lim_1 = 2 * (d(0) - d(3)) + 2 * im[0];
    const double lim_3 = 2 * (d(2) - d(1)) + 2 * im[2];
    if (!continuum_done) {
      continuum_done = true;
      double qerr = 0;
      std::array<double, 4> iq{};
      for (int m = 1; m <= 4; ++m) {
        iq[m - 1] = correction_term_Im_quadrature(gc, cf, m, 24);
        qerr = std::max(qerr, std::abs(iq[m - 1] - im[m - 1]));
      }
      r.clause("I_m closed form vs quadrature", qerr < 1e-6, sci(qerr));
      const double id_e = std::abs(2 * dsum + iq[0] + iq[2] - (s_c + ew));
      const double id_1 = std::abs(2 * (d(0) - d(3)) + 2 * iq[0] - ew);
      const double id_3 = std::abs(2 * (d(2) - d(1)) + 2 * iq[2] - ew);
      r.clause("continuum identity at e: 2(d1-d2+d3-d4)EW + I1 + I3 = EW_l1 W_l2 + EW", id_e < 1e-6, sci(id_e));
      r.clause("continuum identity at e1: 2(d1-d4)EW + 2 I1 = EW", id_1 < 1e-6, sci(id_1));
      r.clause("continuum identity at e3inv: 2(d3-d2)EW + 2 I3 = EW", id_3 < 1e-6, sci(id_3));
      for (int m = 1; m <= 4; ++m) {
        Row row = make_row(r.experiment, "U(1)", 0.0, "fig8", "I" + std::to_string(m));
        row.value = iq[m - 1];
        row.target = im[m - 1];
        row.gap = std::abs(iq[m - 1] - im[m - 1]);
        r.rows.push_back(row);
      }
    }
    U1Exact u(eps);
    std::set<size_t> locs;
    for (const auto* v : {&fig.ann.e, &fig.ann.e1, &fig.ann.e3inv}) locs.insert(v->begin(), v->end());
    CrossingEval ce = evaluate_locations(fig, u, locs);
    auto worst = [&](const std::vector<size_t>& span, double target) {
      double m = 0;
      for (size_t x : span) m = std::max(m, std::abs(ce.def.at(x) - target));
      return m;
    };
    g_e.push_back(worst(fig.ann.e, lim_e));
    g_1.push_back(worst(fig.ann.e1, lim_1));
    g_3.push_back(worst(fig.ann.e3inv, lim_3));
    const std::array<std::pair<const char*, double>, 3> lims{
        {{"crossing-at-e", lim_e}, {"crossing-at-e1", lim_1}, {"crossing-at-e3inv", lim_3}}};
    const std::array<double, 3> gg{g_e.back(), g_1.back(), g_3.back()};
    for (int i = 0; i < 3; ++i) {
      Row row = make_row(r.experiment, "U(1)", eps, lims[i].first, "deformation-max");
      row.target = lims[i].second;
      row.gap = gg[i];
      row.residual = ce.max_residual;
      r.rows.push_back(row);
    }
  }
  r.clause("discrete sweep at e: gap strictly decreasing", strictly_decreasing(g_e), join(g_e));
  r.clause("discrete sweep at e1: gap strictly decreasing", strictly_decreasing(g_1), join(g_1));
  r.clause("discrete sweep at e3inv: gap strictly decreasing", strictly_decreasing(g_3), join(g_3));
  fill_rates(r.rows);
  return r;
}

SweepReport convergence_opposed(double t_left, double t_right, const SweepOptions& opt) {
  SweepReport r;
  r.experiment = "converge-crossing";
  const std::vector<double> tv{0.0, t_left, 0.0, t_right};
  std::vector<double> gaps;
  double worst_res = 0, worst_cont = 0;
  bool sign_flip = true;
  std::string sign_detail;
  for (double eps : opt.eps) {
    AnnotatedLoop ol = opposed_lobes(t_left, t_right, eps);
    AnnotatedLoop sq = square_lobes(t_left, t_right, eps);
    const size_t x0 = ol.ann.e.at(0), y0 = ol.ann.e_bar.back();
    Equation eo = assemble({kU1, LoopString{{ol.loop}}, 0, x0, eps, EqKind::Single, {}});
    Equation es = assemble({kU1, LoopString{{sq.loop}}, 0, sq.ann.e.at(0), eps, EqKind::Single, {}});
    bool ok = eo.count("S-") == 1 && eo.count("S+") == 0 && eo.coef_of("S-") == 1.0 && es.count("S+") == 1 &&
              es.coef_of("S+") == -1.0;
    sign_flip = sign_flip && ok;
    sign_detail = "opposed S- coef " + fmt(eo.coef_of("S-")) + ", same-direction S+ coef " + fmt(es.coef_of("S+"));

    U1Exact u(eps);
    CrossingEval ce = evaluate_locations(ol, u, annotated_locations(ol.ann));
    worst_res = std::max(worst_res, ce.max_residual);
    PlanarLoopGraph gc = with_areas(build_graph(ol.loop, eps), ol.face_cells, tv);
    const double dsum = alternating_sum(gc, ol.face_cells, DerivBackend::Analytic);
    const double s_c = string_continuum(split_negative(ol.loop, ol.loop[x0], x0, y0), eps, ol.face_cells, tv);
    worst_cont = std::max(worst_cont, std::abs(dsum - s_c));
    // the deformation combination tends to -(d1-d2+d3-d4)EW here
    double max_gap, lo, hi;
    triple_rows(r, "opposed", ol, ce, dsum, -1.0, max_gap, lo, hi);
    gaps.push_back(max_gap);
  }
  r.clause("opposed orientation flips the splitting sign", sign_flip, sign_detail);
  r.clause("opposed orientation: exact discrete identity", worst_res < opt.exact_tol, sci(worst_res));
  r.clause("opposed orientation: same continuum limit", worst_cont < 1e-8, sci(worst_cont));
  r.clause("opposed orientation: gap strictly decreasing", strictly_decreasing(gaps), join(gaps));
  r.clause("opposed orientation: final gap < " + sci(opt.final_tol), gaps.back() < opt.final_tol, sci(gaps.back()));
  fill_rates(r.rows);
  return r;
}

// ---------------------------------------------------------------------------------------------
// mergers

SweepReport convergence_merger(const std::array<double, 3>& t, const SweepOptions& opt,
                               const std::vector<Combination>& combos) {
  SweepReport r;
  r.experiment = "converge-merger";
  const std::vector<double> tv{t[0], t[1], 0.0, t[2]};
  std::vector<double> gaps;
  std::vector<std::vector<double>> cgaps(combos.size());
  std::vector<double> cdiff(combos.size(), 0.0);
  double worst_res = 0, worst_cont = 0, worst_term = 0;
  bool merged_shape = true;
  for (double eps : opt.eps) {
    AnnotatedString m = merger_pair(t[0], t[1], t[2], eps);
    U1Exact u(eps);
    std::map<std::pair<size_t, size_t>, double> def;
    auto need = [&](size_t comp, const std::vector<size_t>& span) {
      for (size_t x : span) {
        if (def.count({comp, x})) continue;
        LocationData d = exact_at(kU1, m.s, comp, x, eps, EqKind::String, u);
        def[{comp, x}] = d.def;
        worst_res = std::max(worst_res, std::abs(d.residual));
      }
    };
    const Segments &s0 = m.seg[0], &s1 = m.seg[1];
    need(0, s0.at("e"));
    need(0, s0.at("e1"));
    need(0, s0.at("e3inv"));
    need(1, s1.at("e"));
    need(1, s1.at("e2"));
    need(1, s1.at("e4inv"));

    Equation e0 = assemble({kU1, m.s, 0, s0.at("e").at(0), eps, EqKind::String, {}});
    LoopString l12;
    for (const Term& tm : e0.terms)
      if (tm.tag == "M+") l12 = tm.s;
    merged_shape = merged_shape && e0.count("M+") == 1 && l12.loops.size() == 1 &&
                   l12.loops[0].size() == m.s.loops[0].size() + m.s.loops[1].size();
    if (l12.loops.size() == 1)
      worst_term = std::max(worst_term, std::abs(u.value(l12) - u.value(l12.loops[0])));

    PlanarLoopGraph gc = with_areas(build_graph(m.s, eps), m.face_cells, tv);
    const double dsum = alternating_sum(gc, m.face_cells, DerivBackend::Analytic);
    const double l12_c = l12.loops.empty() ? kNaN : string_continuum(l12, eps, m.face_cells, tv);
    worst_cont = std::max(worst_cont, std::abs(dsum - l12_c));
    const double ew = u.value(m.s);

    double max_gap = 0;
    auto sweep = [&](size_t comp, const std::vector<size_t>& se, const std::vector<size_t>& sa,
                     const std::vector<size_t>& sb, const std::string& label) {
      for (size_t x : se)
        for (size_t xa : sa)
          for (size_t xb : sb) {
            double phi = def.at({comp, x}) - 0.5 * def.at({comp, xa}) - 0.5 * def.at({comp, xb});
            max_gap = std::max(max_gap, std::abs(phi - dsum));
          }
      Row row = make_row(r.experiment, "U(1)", eps, label, "combination-max");
      row.target = dsum;
      row.gap = max_gap;
      r.rows.push_back(row);
    };
    sweep(0, s0.at("e"), s0.at("e1"), s0.at("e3inv"), "pair:t1");
    sweep(1, s1.at("e"), s1.at("e2"), s1.at("e4inv"), "pair:t2");
    gaps.push_back(max_gap);
    const double phi_std = def.at({0, s0.at("e")[0]}) - 0.5 * def.at({0, s0.at("e1")[0]}) -
                           0.5 * def.at({0, s0.at("e3inv")[0]});
    for (size_t c = 0; c < combos.size(); ++c) {
      const Combination& cb = combos[c];
      double phi = cb.b[0] * def.at({0, s0.at("e")[0]}) + cb.b[1] * def.at({1, s1.at("e")[0]}) - cb.a[0] * ew -
                   cb.a[1] * def.at({0, middle(s0.at("e1"))}) - cb.a[2] * def.at({1, middle(s1.at("e2"))}) -
                   cb.a[3] * def.at({0, middle(s0.at("e3inv"))}) - cb.a[4] * def.at({1, middle(s1.at("e4inv"))});
      double gap = std::abs(phi - dsum);
      cgaps[c].push_back(gap);
      cdiff[c] = std::abs(phi - phi_std);
      Row row = make_row(r.experiment, "U(1)", eps, "pair:ab" + std::to_string(c), "combination");
      row.value = phi;
      row.target = dsum;
      row.gap = gap;
      r.rows.push_back(row);
    }
    Row mr = make_row(r.experiment, "U(1)", eps, "pair:merger", "merger");
    mr.value = l12.loops.empty() ? kNaN : u.value(l12);
    mr.target = l12_c;
    mr.gap = std::abs(mr.value - l12_c);
    r.rows.push_back(mr);
  }
  r.clause("merger: exact discrete identity", worst_res < opt.exact_tol, sci(worst_res));
  r.clause("merger: single merged loop of combined length", merged_shape, merged_shape ? "ok" : "mismatch");
  r.clause("merger term equals 1-loop expectation of l12", worst_term == 0.0, sci(worst_term));
  r.clause("merger: continuum identity (d1-d2-d4)EW_s = EW_l12", worst_cont < 1e-8, sci(worst_cont));
  r.clause("merger: gap strictly decreasing", strictly_decreasing(gaps), join(gaps));
  r.clause("merger: final gap < " + sci(opt.final_tol), gaps.back() < opt.final_tol, sci(gaps.back()));
  for (size_t c = 0; c < combos.size(); ++c) {
    const std::string nm = "merger combination ab" + std::to_string(c);
    r.clause(nm + " gap strictly decreasing", strictly_decreasing(cgaps[c]), join(cgaps[c]));
    r.clause(nm + " same limit", cdiff[c] < opt.final_tol, sci(cdiff[c]));
  }
  fill_rates(r.rows);
  return r;
}

// ---------------------------------------------------------------------------------------------
// degenerate crossings

SweepReport degenerate_checks(DegenerateKind kind, double eps) {
  SweepReport r;
  r.experiment = "degenerate";
  const bool three = kind == DegenerateKind::ThreeFace;
  const std::string nm = three ? "three-face" : "unbounded-face";
  AnnotatedLoop d = degenerate_loop(kind, eps);
  PlanarLoopGraph g = build_graph(d.loop, eps);
  g.eps = 0;
  const int fs = g.face_of_cell(d.face_cells[0]);
  const int f2 = g.face_of_cell(d.face_cells[1]);
  const int f4 = g.face_of_cell(d.face_cells[3]);
  r.clause(nm + ": F1 and F3 form one face", fs != 0 && fs == g.face_of_cell(d.face_cells[2]),
           "faces " + std::to_string(fs) + "/" + std::to_string(g.face_of_cell(d.face_cells[2])));
  const size_t x0 = d.ann.e.at(0), y0 = d.ann.e_bar.at(0);
  const LoopString split = split_positive(d.loop, d.loop[x0], x0, y0);
  PlanarLoopGraph gs = build_graph(split, eps);
  const double s_c = u1_expectation_continuum(gs);

  auto an = [&](const std::vector<Face>& faces, int f) {
    return -0.5 * faces[f].winding * faces[f].winding * u1_continuum_from_areas(faces);
  };
  auto fd = [&](std::vector<Face> faces, int f) {
    faces[f].bounded = true;
    const double a = faces[f].area > 0 ? faces[f].area : 1.0, h = 1e-4 * a;
    faces[f].area = a + h;
    double up = u1_continuum_from_areas(faces);
    faces[f].area = a - h;
    double dn = u1_continuum_from_areas(faces);
    return (up - dn) / (2 * h);
  };
  const auto& F = g.faces;
  const double lhs_pre = 2 * an(F, fs) - an(F, f2) - (three ? an(F, f4) : 0.0);
  const double pre = std::abs(lhs_pre - s_c);
  r.clause(nm + ": identity before surgery", pre < 1e-8, sci(pre));
  double fd_err = std::max(std::abs(fd(F, fs) - an(F, fs)), std::abs(fd(F, f2) - an(F, f2)));
  if (three) fd_err = std::max(fd_err, std::abs(fd(F, f4) - an(F, f4)));
  r.clause(nm + ": finite-difference vs analytic", fd_err < 1e-6, sci(fd_err));
  if (!three) {
    const double d4 = std::abs(an(F, f4)) + std::abs(fd(F, f4));
    r.clause(nm + ": d4 EW = 0 on the unbounded face", d4 == 0.0 && f4 == 0, sci(d4));
  }

  // auxiliary edge splits face s into t1 = 0.4 s and t3 = 0.6 s
  std::vector<Face> G = F;
  Face s1 = F[fs], s3 = F[fs];
  s1.area = 0.4 * F[fs].area;
  s3.area = 0.6 * F[fs].area;
  G[fs] = s1;
  G.push_back(s3);
  const int f1n = fs, f3n = int(G.size()) - 1;
  const double lhs_post = an(G, f1n) - an(G, f2) + an(G, f3n) - (three ? an(G, f4) : 0.0);
  const double post = std::abs(lhs_post - s_c);
  r.clause(nm + ": identity after surgery (d1-d2+d3-d4)", post < 1e-8, sci(post));
  const double ds = std::abs(2 * an(F, fs) - (an(G, f1n) + an(G, f3n)));
  r.clause(nm + ": 2 d_s = d_1 + d_3 under p_s = p_t1 * p_t3", ds < 1e-8, sci(ds));
  double semi = 0;
  for (double th : {0.0, 0.7, 1.9, 3.0, -2.2}) {
    double conv = circle_trapezoid([&](double ph) { return u1_heat_kernel(th - ph, s1.area) * u1_heat_kernel(ph, s3.area); },
                                   512);
    semi = std::max(semi, std::abs(conv - u1_heat_kernel(th, F[fs].area)));
  }
  r.clause(nm + ": semigroup p_s = p_t1 * p_t3", semi < 1e-9, sci(semi));

  U1Exact u(eps);
  Equation eq = assemble({kU1, LoopString{{d.loop}}, 0, x0, eps, EqKind::Single, {}});
  const double res = std::abs(evaluate_exact(eq, u).residual);
  r.clause(nm + ": exact discrete identity at e", res < 1e-9, sci(res));

  Row row = make_row(r.experiment, "U(1)", eps, nm, "2ds-d2" + std::string(three ? "-d4" : ""));
  row.value = lhs_pre;
  row.target = s_c;
  row.gap = pre;
  row.residual = res;
  r.rows.push_back(row);
  Row row2 = make_row(r.experiment, "U(1)", eps, nm, "surgery");
  row2.value = lhs_post;
  row2.target = s_c;
  row2.gap = post;
  r.rows.push_back(row2);
  fill_rates(r.rows);
  return r;
}

// ---------------------------------------------------------------------------------------------
// exact identities on many loops

Loop random_loop(Rng& rng, int steps, int radius) {
  Word w;
  Point p{0, 0};
  std::uniform_int_distribution<int> dir(0, 3);
  for (int i = 0; i < steps; ++i) {
    for (;;) {
      Bond b{p.x, p.y, Dir(dir(rng))};
      Point q = b.end();
      if (std::abs(q.x) > radius || std::abs(q.y) > radius) continue;
      w.push_back(b);
      p = q;
      break;
    }
  }
  while (p.x != 0) {
    Bond b{p.x, p.y, p.x > 0 ? L : R};
    w.push_back(b);
    p = b.end();
  }
  while (p.y != 0) {
    Bond b{p.x, p.y, p.y > 0 ? D : U};
    w.push_back(b);
    p = b.end();
  }
  if (w.empty()) return Loop();
  return make_loop_or_trivial(w);
}

SweepReport verify_discrete(const DiscreteOptions& opt) {
  SweepReport r;
  r.experiment = "verify-discrete";
  std::map<std::string, double> worst;
  std::map<std::string, long> counts;
  Rng rng(opt.seed);
  auto record = [&](const std::string& set, const std::string& id, double eps, const LoopString& s, size_t comp,
                    size_t x, EqKind kind, const U1Exact& u) {
    Equation eq = assemble({kU1, s, comp, x, eps, kind, opt.perturb});
    EquationReport rep = evaluate_exact(eq, u);
    worst[set] = std::max(worst[set], std::abs(rep.residual));
    counts[set]++;
    Row row = make_row(r.experiment, "U(1)", eps, id, "residual");
    row.value = rep.lhs;
    row.target = rep.rhs;
    row.residual = rep.residual;
    row.gap = std::abs(rep.residual);
    r.rows.push_back(row);
  };
  for (double eps : opt.eps) {
    U1Exact u(eps);
    AnnotatedLoop fig = figure_eight({0.5, 1.0, 0.5, 1.5}, eps);
    for (size_t x = 0; x < fig.loop.size(); ++x)
      record("figure-eight", "fig8:" + std::to_string(x), eps, LoopString{{fig.loop}}, 0, x, EqKind::Single, u);
    AnnotatedLoop sq = square_lobes(0.5625, 0.5625, eps);
    for (size_t x = 0; x < sq.loop.size(); ++x)
      record("square-lobes", "lobes:" + std::to_string(x), eps, LoopString{{sq.loop}}, 0, x, EqKind::Single, u);
    AnnotatedLoop ol = opposed_lobes(0.5625, 0.5625, eps);
    for (size_t x = 0; x < ol.loop.size(); ++x)
      record("opposed-lobes", "opposed:" + std::to_string(x), eps, LoopString{{ol.loop}}, 0, x, EqKind::Single, u);
    AnnotatedString mp = merger_pair(0.5, 1.0, 1.0, eps);
    for (size_t c = 0; c < 2; ++c)
      for (size_t x = 0; x < mp.s.loops[c].size(); ++x)
        record("merger-pair", "pair:" + std::to_string(c) + ":" + std::to_string(x), eps, mp.s, c, x,
               EqKind::String, u);
  }
  std::uniform_int_distribution<int> steps(8, 60);
  for (int k = 0; k < opt.random_loops; ++k) {
    Loop l;
    while (l.trivial()) l = random_loop(rng, steps(rng), 3);
    const double eps = opt.eps[size_t(k) % opt.eps.size()];
    size_t x = std::uniform_int_distribution<size_t>(0, l.size() - 1)(rng);
    record("random-loops", "random:" + std::to_string(k), eps, LoopString{{l}}, 0, x, EqKind::Single, U1Exact(eps));
  }
  for (int k = 0; k < opt.random_strings; ++k) {
    LoopString s;
    const int m = 2 + k % 2;
    while (int(s.loops.size()) < m) {
      Loop l = random_loop(rng, steps(rng), 2);
      if (!l.trivial()) s.loops.push_back(l);
    }
    const double eps = opt.eps[size_t(k) % opt.eps.size()];
    size_t c = std::uniform_int_distribution<size_t>(0, s.loops.size() - 1)(rng);
    size_t x = std::uniform_int_distribution<size_t>(0, s.loops[c].size() - 1)(rng);
    record("random-strings", "rstring:" + std::to_string(k), eps, s, c, x, EqKind::String, U1Exact(eps));
  }
  double overall = 0;
  for (const auto& [set, w] : worst) {
    overall = std::max(overall, w);
    r.clause("exact identity: " + set + " (" + std::to_string(counts[set]) + " equations)", w < opt.tol, sci(w));
  }
  Row row = make_row(r.experiment, "U(1)", 0.0, "all", "max-residual");
  row.value = overall;
  row.gap = overall;
  r.rows.push_back(row);
  return r;
}

// ---------------------------------------------------------------------------------------------
// Monte-Carlo

FigureEightParams mc_figure_eight_params() {
  FigureEightParams p;
  p.C = 1;
  p.H1 = 3;
  p.H3 = 3;
  p.Wl = 2;
  p.W2 = 2;
  p.H2t = 5;
  p.H2b = 5;
  p.b1 = 0;
  p.b2 = 2;
  p.b3 = 0;
  p.b4 = 2;
  return p;
}

namespace {

Row mc_row(const std::string& exp, const GroupSpec& g, double eps, const std::string& id, const std::string& term,
           const Estimate& e, double target) {
  Row row = make_row(exp, g.name(), eps, id, term);
  row.value = e.mean;
  row.sigma = e.sigma;
  row.residual = e.mean - target;
  row.residual_sigma = e.sigma;
  row.target = target;
  row.gap = std::abs(e.mean - target);
  return row;
}

double zscore(const Estimate& e, double target = 0.0) {
  if (e.sigma > 0) return std::abs(e.mean - target) / e.sigma;
  return e.mean == target ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

SweepReport mc_equation_check(const GroupSpec& spec, const std::string& shape, const McOptions& opt) {
  SweepReport r;
  r.experiment = "sample-diagnostics";
  const std::string tag = spec.name() + " " + shape;
  Loop l;
  size_t x_main = 0;
  if (shape == "rectangle") {
    l = rectangle_cells(2, 2, opt.eps).loop;
  } else if (shape == "figure-eight") {
    AnnotatedLoop fig = figure_eight_geometry(mc_figure_eight_params(), opt.eps);
    l = fig.loop;
    x_main = fig.ann.e.at(0);
  } else {
    throw std::invalid_argument("unknown shape '" + shape + "'");
  }
  const LoopString s{{l}};
  McPlan plan;
  Equation main = assemble({spec, s, 0, x_main, opt.eps, EqKind::Unified, {}});
  size_t c_main = plan.add_residual(main);
  size_t c_exp = plan.add_combo(family_terms(main, "expansion", 1.0));
  Rng rng(split_seed(opt.sched.seed, 0x5eed));
  std::vector<std::pair<Equation, size_t>> extra;
  for (int k = 0; k < opt.random_equations; ++k) {
    size_t x = std::uniform_int_distribution<size_t>(0, l.size() - 1)(rng);
    Equation eq = assemble({spec, s, 0, x, opt.eps, EqKind::Unified, {}});
    extra.push_back({eq, plan.add_residual(eq)});
  }
  LatticeBox box = LatticeBox::around(plan.strings(), opt.margin);
  McResult res = run_chains(box, ActionParams{opt.eps, spec}, plan.observables(), opt.sched, opt.parallel);
  EquationReport rep = report_mc(main, plan, res, c_main);

  r.rows.push_back(mc_row(r.experiment, spec, opt.eps, shape + ":x" + std::to_string(x_main), "residual",
                          res.combos[c_main], 0.0));
  const double z = zscore(res.combos[c_main]);
  r.clause(tag + ": master loop equation residual within 3 sigma", z <= 3.0,
           "residual " + sci(rep.residual) + " +- " + sci(rep.residual_sigma) + " (z=" + sci(z) + ")");
  if (spec.gamma() != 0) {
    r.rows.push_back(mc_row(r.experiment, spec, opt.eps, shape + ":x" + std::to_string(x_main), "expansion-pair",
                            res.combos[c_exp], 0.0));
  }
  int ok = 0;
  for (size_t k = 0; k < extra.size(); ++k) {
    const Estimate& e = res.combos[extra[k].second];
    if (zscore(e) <= 3.0) ++ok;
    r.rows.push_back(mc_row(r.experiment, spec, opt.eps, shape + ":x" + std::to_string(extra[k].first.spec.x),
                            "residual", e, 0.0));
  }
  if (!extra.empty()) {
    const double frac = double(ok) / double(extra.size());
    r.clause(tag + ": random locations within 3 sigma in >= 95%", frac >= 0.95,
             std::to_string(ok) + "/" + std::to_string(extra.size()));
  }
  const double N = spec.N, beta = spec.beta();
  const double tau = (2.0 - beta) / (beta * N);
  if (shape == "figure-eight") {
    const double lhs_twist = main.count("T-") ? -main.coef_of("T-") : 0.0;
    r.clause(tag + ": twist coefficient -(2-beta)/(beta N)", std::abs(lhs_twist + tau) < 1e-15,
             "twist " + fmt(lhs_twist));
    const double want = 1.0 - tau - 2.0 * spec.gamma() / (N * N);
    r.clause(tag + ": LHS constant", std::abs(main.lhs_coef - want) < 1e-15, fmt(main.lhs_coef));
  }
  Row acc = make_row(r.experiment, spec.name(), opt.eps, shape, "acceptance");
  acc.value = res.acceptance;
  r.rows.push_back(acc);
  return r;
}

SweepReport convergence_unified(const GroupSpec& spec, const McOptions& opt) {
  SweepReport r;
  r.experiment = "converge-unified";
  const std::string g = spec.name();
  const double eps = opt.eps, N = spec.N, beta = spec.beta(), gamma = spec.gamma();
  const double tau = (2.0 - beta) / (beta * N);
  const FigureEightParams base = mc_figure_eight_params();
  AnnotatedLoop fig = figure_eight_geometry(base, eps);
  const LoopString s{{fig.loop}};
  const size_t xa = fig.ann.e.at(0), x1 = middle(fig.ann.e1), x3 = middle(fig.ann.e3inv);
  Equation A = assemble({spec, s, 0, xa, eps, EqKind::Unified, {}});
  Equation B = assemble({spec, s, 0, x1, eps, EqKind::Unified, {}});
  Equation C = assemble({spec, s, 0, x3, eps, EqKind::Unified, {}});

  auto variant = [&](int which, int delta) {
    FigureEightParams p = base;
    int* f[4] = {&p.b1, &p.b2, &p.b3, &p.b4};
    *f[which] += delta;
    return LoopString{{figure_eight_geometry(p, eps).loop}};
  };
  const double h = eps * eps;
  std::vector<std::pair<LoopString, double>> fd{
      {variant(0, 1), 1 / h}, {s, -1 / h},  // d1 - d4, forward
      {variant(2, 1), 1 / h}, {s, -1 / h},  // d3 - d4, forward
      {variant(1, 1), -0.5 / h}, {variant(1, -1), 0.5 / h},
      {variant(3, 1), 0.5 / h}, {variant(3, -1), -0.5 / h}};

  LoopString split, twist;
  for (const Term& t : A.terms) {
    if (t.tag == "S+") split = t.s;
    if (t.tag == "T-") twist = t.s;
  }
  std::vector<std::pair<LoopString, double>> wlg{{split, 1.0}, {s, -gamma / (N * N)}};
  if (tau != 0.0) wlg.push_back({twist, -tau});

  McPlan plan;
  std::vector<std::pair<LoopString, double>> comb = residual_terms(A, 1.0);
  extend(comb, residual_terms(B, -0.5));
  extend(comb, residual_terms(C, -0.5));
  const size_t c_comb = plan.add_combo(comb);
  std::vector<std::pair<LoopString, double>> def = family_terms(A, "deformation", 1.0);
  extend(def, family_terms(B, "deformation", -0.5));
  extend(def, family_terms(C, "deformation", -0.5));
  std::vector<std::pair<LoopString, double>> ex = family_terms(A, "expansion", 1.0);
  extend(ex, family_terms(B, "expansion", -0.5));
  extend(ex, family_terms(C, "expansion", -0.5));
  const size_t c_def = plan.add_combo(def);
  const size_t c_exp = ex.empty() ? size_t(-1) : plan.add_combo(ex);
  const size_t c_wlg = plan.add_combo(wlg);
  const size_t c_fd = plan.add_combo(fd);
  auto fd_minus_wlg = fd;
  for (auto [st, w] : wlg) fd_minus_wlg.push_back({st, -w});
  const size_t c_fdw = plan.add_combo(fd_minus_wlg);
  auto def_minus_fd = def;
  for (auto [st, w] : fd) def_minus_fd.push_back({st, -w});
  const size_t c_dfd = plan.add_combo(def_minus_fd);
  const size_t c_A = plan.add_residual(A), c_B = plan.add_residual(B), c_C = plan.add_residual(C);

  LatticeBox box = LatticeBox::around(plan.strings(), opt.margin);
  McResult res = run_chains(box, ActionParams{eps, spec}, plan.observables(), opt.sched, opt.parallel);

  const Estimate& R = res.combos[c_comb];
  r.rows.push_back(mc_row(r.experiment, spec, eps, "fig8", "combined-residual", R, 0.0));
  r.rows.push_back(mc_row(r.experiment, spec, eps, "fig8", "deformation-combination", res.combos[c_def],
                          res.combos[c_wlg].mean));
  if (c_exp != size_t(-1))
    r.rows.push_back(mc_row(r.experiment, spec, eps, "fig8", "expansion-combination", res.combos[c_exp], 0.0));
  r.rows.push_back(mc_row(r.experiment, spec, eps, "fig8", "rhs", res.combos[c_wlg], 0.0));
  r.rows.push_back(mc_row(r.experiment, spec, eps, "fig8", "fd-alternating-sum", res.combos[c_fd],
                          res.combos[c_wlg].mean));
  r.rows.push_back(mc_row(r.experiment, spec, eps, "fig8", "fd-minus-rhs", res.combos[c_fdw], 0.0));
  r.rows.push_back(mc_row(r.experiment, spec, eps, "fig8", "deformation-minus-fd", res.combos[c_dfd], 0.0));
  for (auto [nm, c] : {std::pair{"residual-e", c_A}, {"residual-e1", c_B}, {"residual-e3inv", c_C}})
    r.rows.push_back(mc_row(r.experiment, spec, eps, "fig8", nm, res.combos[c], 0.0));

  const double z = zscore(R);
  r.clause(g + ": combined residual within 3 sigma", z <= 3.0,
           sci(R.mean) + " +- " + sci(R.sigma) + " (z=" + sci(z) + ")");
  const double lhs_twist = A.count("T-") ? -A.coef_of("T-") : 0.0;
  r.clause(g + ": twist coefficient audit", std::abs(lhs_twist + tau) < 1e-15, fmt(lhs_twist));
  const double gam_term = (A.lhs_coef - 0.5 * B.lhs_coef - 0.5 * C.lhs_coef);
  r.clause(g + ": gamma term -gamma/N^2 EW", std::abs(gam_term + gamma / (N * N)) < 1e-15, fmt(gam_term));
  const double zf = zscore(res.combos[c_fdw]);
  r.clause(g + ": finite-difference comparison (reported)", true,
           "FD - rhs = " + sci(res.combos[c_fdw].mean) + " +- " + sci(res.combos[c_fdw].sigma) + " (z=" + sci(zf) +
               "); deformation - FD = " + sci(res.combos[c_dfd].mean) + " +- " + sci(res.combos[c_dfd].sigma));
  Row acc = make_row(r.experiment, g, eps, "fig8", "acceptance");
  acc.value = res.acceptance;
  r.rows.push_back(acc);
  return r;
}

}  // namespace lf
