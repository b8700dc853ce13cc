#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "loopfield/harness.hpp"

namespace lf {

namespace {

Word seg(Point p, const std::string& moves) { return moves_word(p, moves); }

Word cat(std::initializer_list<Word> parts) {
  Word w;
  for (const Word& p : parts) w.insert(w.end(), p.begin(), p.end());
  return w;
}

Word inv(const Word& w) {
  Word out;
  for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back(it->inverse());
  return out;
}

/** Canonical location in l of raw[k], where l = make_loop(raw) and raw is already clean. */
size_t locate(const Loop& l, const Word& raw, size_t k) {
  Word want(raw.begin() + k, raw.end());
  want.insert(want.end(), raw.begin(), raw.begin() + k);
  for (size_t x = 0; x < l.size(); ++x)
    if (l.rotated(x) == want) return x;
  throw LoopError("raw word does not match loop");
}

std::vector<std::string> strs(const std::vector<Loop>& ls) {
  std::vector<std::string> out;
  for (const Loop& l : ls) out.push_back(l.str());
  std::sort(out.begin(), out.end());
  return out;
}

LoopOpCase make_case(const std::string& name, const std::string& op, std::vector<Loop> in, std::vector<Loop> expected,
                     std::vector<Loop> got) {
  LoopOpCase c;
  c.name = name;
  c.op = op;
  for (const Loop& l : in) c.input.push_back(l.str());
  c.expected = strs(expected);
  c.got = strs(got);
  c.match = c.expected == c.got;
  return c;
}

}  // namespace

std::vector<LoopOpCase> loop_op_cases() {
  std::vector<LoopOpCase> out;
  const Bond e{0, 0, U};

  // a e b e c, e = (0,0)U, lobes left and right of e
  {
    Word a = seg({1, 1}, "DL"), b = seg({0, 1}, "LDR"), c = seg({0, 1}, "R");
    const Word raw = cat({a, {e}, b, {e}, c});
    Loop l = make_loop(raw);
    const size_t x = locate(l, raw, a.size()), y = locate(l, raw, a.size() + 1 + b.size());
    out.push_back(make_case("aebec -> (aec, be)", "split_positive", {l},
                            {make_loop(cat({a, {e}, c})), make_loop(cat({b, {e}}))}, split_positive(l, e, x, y).loops));
    out.push_back(make_case("aebec -> ab^-1c", "twist_negative", {l}, {make_loop(cat({a, inv(b), c}))},
                            {twist_negative(l, e, x, y)}));
    // swapping the locations swaps the roles of b and ca
    out.push_back(make_case("aebec split at (y, x)", "split_positive", {l},
                            {make_loop(cat({a, {e}, c})), make_loop(cat({b, {e}}))}, split_positive(l, e, y, x).loops));
    out.push_back(make_case("aebec twist at (y, x) -> (ab^-1c)^-1", "twist_negative", {l},
                            {make_loop(cat({a, inv(b), c})).inverse()}, {twist_negative(l, e, y, x)}));
  }
  // a e b e^-1 c
  {
    Word a = seg({0, -1}, "U"), b = seg({0, 1}, "RULD"), c = seg({0, 0}, "RDL");
    const Word raw = cat({a, {e}, b, {e.inverse()}, c});
    Loop l = make_loop(raw);
    const size_t x = locate(l, raw, a.size()), y = locate(l, raw, a.size() + 1 + b.size());
    out.push_back(make_case("aebe^-1c -> (ac, b)", "split_negative", {l}, {make_loop(cat({a, c})), make_loop(b)},
                            split_negative(l, e, x, y).loops));
    out.push_back(make_case("aebe^-1c -> aeb^-1e^-1c", "twist_positive", {l},
                            {make_loop(cat({a, {e}, inv(b), {e.inverse()}, c}))}, {twist_positive(l, e, x, y)}));
  }
  // mergers: l = aeb on the left cell, l' on the right cell
  {
    Word a = seg({-1, 0}, "R"), b = seg({0, 1}, "LD");
    Loop l = make_loop(cat({a, {e}, b}));
    const size_t x = occurrences(l, e).at(0);
    Word c = seg({1, 0}, "L"), d = seg({0, 1}, "RD");
    Loop lp = make_loop(cat({c, {e}, d}));
    const size_t y = occurrences(lp, e).at(0);
    out.push_back(make_case("(aeb, ced) -> aedceb", "merge_positive", {l, lp},
                            {make_loop(cat({a, {e}, d, c, {e}, b}))}, {merge_positive(l, lp, e, x, y)}));
    out.push_back(make_case("(aeb, ced) -> ac^-1d^-1b", "merge_negative", {l, lp},
                            {make_loop_or_trivial(cat({a, inv(c), inv(d), b}))}, {merge_negative(l, lp, e, x, y)}));
    Word c2 = seg({1, 1}, "L"), d2 = seg({0, 0}, "RU");
    Loop lq = make_loop(cat({c2, {e.inverse()}, d2}));
    const size_t y2 = occurrences(lq, e.inverse()).at(0);
    out.push_back(make_case("(aeb, ce^-1d) -> adcb", "merge_negative", {l, lq}, {make_loop(cat({a, d2, c2, b}))},
                            {merge_negative(l, lq, e, x, y2)}));
    out.push_back(make_case("(aeb, ce^-1d) -> aec^-1d^-1eb", "merge_positive", {l, lq},
                            {make_loop(cat({a, {e}, inv(c2), inv(d2), {e}, b}))}, {merge_positive(l, lq, e, x, y2)}));
  }
  // deformations of a 2x2 square at its first bottom bond
  {
    const Bond f{0, 0, R};
    Loop sq = make_loop(seg({0, 0}, "RRUULLDD"));
    const size_t x = occurrences(sq, f).at(0);
    DeformationSets ds = deformation_sets(sq, f, x);
    out.push_back(make_case("square: inner/outer negative deformations", "deformation_minus", {sq},
                            {make_loop(seg({1, 0}, "RUULLDRD")), make_loop(seg({0, -1}, "RURUULLDDD"))}, ds.minus));
    out.push_back(make_case("square: inner/outer positive deformations", "deformation_plus", {sq},
                            {make_loop(seg({0, 0}, "RULDRRUULLDD")), make_loop(seg({0, 0}, "RDLURRUULLDD"))},
                            ds.plus));
    // deformation as a merger with the plaquette
    auto through = plaquettes_through(f);
    std::vector<Loop> via;
    for (const Loop& p : through) via.push_back(merge_negative(sq, p, f, x, occurrences(p, f).at(0)));
    out.push_back(make_case("negative deformation = negative merger with plaquettes", "deformation_minus", {sq}, via,
                            ds.minus));
    ExpansionSets es = expansion_sets(sq, f, x);
    std::vector<Loop> firsts, seconds;
    for (const LoopString& s : es.plus) {
      firsts.push_back(s.loops.at(0));
      seconds.push_back(s.loops.at(1));
    }
    out.push_back(make_case("positive expansions keep l", "expansion_plus", {sq}, {sq, sq}, firsts));
    out.push_back(make_case("positive expansion plaquettes run through e^-1", "expansion_plus", {sq},
                            {make_loop(seg({0, 0}, "URDL")), make_loop(seg({0, 0}, "DRUL"))}, seconds));
  }
  // single plaquette: inner negative deformation erases to the trivial loop
  {
    const Bond f{0, 0, R};
    Loop p = plaquette(0, 0);
    DeformationSets ds = deformation_sets(p, f, occurrences(p, f).at(0));
    std::vector<Loop> trivial;
    for (const Loop& m : ds.minus)
      if (m.trivial()) trivial.push_back(m);
    out.push_back(make_case("plaquette inner negative deformation -> trivial", "deformation_minus", {p}, {Loop()},
                            trivial));
  }
  // canonical form and erasure
  {
    Loop l1 = make_loop(cat({seg({0, 0}, "RU"), seg({1, 1}, "RL"), seg({1, 1}, "LD")}));
    out.push_back(make_case("a e e^-1 b -> ab", "make_loop", {l1}, {plaquette(0, 0)}, {l1}));
    Word w = cat({seg({1, 1}, "DL"), {e}, seg({0, 1}, "LDR"), {e}, seg({0, 1}, "R")});
    Word rot(w.begin() + 3, w.end());
    rot.insert(rot.end(), w.begin(), w.begin() + 3);
    out.push_back(make_case("aebec == becae", "make_loop", {make_loop(w)}, {make_loop(w)}, {make_loop(rot)}));
  }
  // string lift: splitting one component of a 2-string gives a 3-string
  {
    Loop fig = make_loop(cat({seg({1, 1}, "DL"), {e}, seg({0, 1}, "LDR"), {e}, seg({0, 1}, "R")}));
    LoopString s{{fig, plaquette(5, 5)}};
    auto occ = occurrences(fig, e);
    LoopString r = replace_component(s, 0, split_positive(fig, e, occ[0], occ[1]).loops);
    out.push_back(make_case("split inside a 2-string", "string_lift", s.loops,
                            {make_loop(seg({1, 1}, "DLUR")), make_loop(seg({0, 1}, "LDRU")), plaquette(5, 5)},
                            r.loops));
  }
  return out;
}

SweepReport loop_ops_report() {
  SweepReport r;
  r.experiment = "loop-ops";
  auto t0 = std::chrono::steady_clock::now();
  auto cases = loop_op_cases();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  size_t ok = 0;
  for (const LoopOpCase& c : cases) {
    ok += c.match;
    std::string got;
    for (const auto& s : c.got) got += s + " ";
    r.clause(c.op + ": " + c.name, c.match, got);
    Row row;
    row.experiment = r.experiment;
    row.group = "-";
    row.triple_id = c.name;
    row.term = c.op;
    row.value = c.match ? 1 : 0;
    row.target = 1;
    row.gap = c.match ? 0 : 1;
    row.rate = std::numeric_limits<double>::quiet_NaN();
    r.rows.push_back(row);
  }
  r.clause("oracle suite complete", ok == cases.size() && secs < 1.0,
           std::to_string(ok) + "/" + std::to_string(cases.size()));
  return r;
}

std::vector<std::string> emit_fixtures(const std::string& kind, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto write = [&](const std::string& name, const std::string& text) {
    fs::path p = fs::path(dir) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + p.string());
    written.push_back(p.string());
  };
  if (kind == "loop-ops") {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const LoopOpCase& c : loop_op_cases())
      j.push_back({{"name", c.name}, {"op", c.op}, {"input", c.input}, {"expected", c.expected}});
    write("loop-ops.json", j.dump(1) + "\n");
  } else if (kind == "graphs") {
    write("figure-eight.json", build_graph(figure_eight({0.5, 1.0, 0.5, 1.5}, 0.25).loop, 0.25).dump() + "\n");
    write("square-lobes.json", build_graph(square_lobes(0.5625, 0.5625, 0.25).loop, 0.25).dump() + "\n");
    write("merger-pair.json", build_graph(merger_pair(0.5, 1.0, 1.0, 0.25).s, 0.25).dump() + "\n");
  } else if (kind == "char-tables") {
    const std::vector<std::pair<GroupSpec, int>> specs{
        {{Family::U, 1}, 20}, {{Family::SU, 2}, 12}, {{Family::SO, 3}, 8}, {{Family::U, 2}, 4}};
    for (const auto& [g, cut] : specs) {
      std::ostringstream os;
      CharCoeffTable::build(g, 0.5, cut).save(os);
      std::string nm = g.name();
      nm.erase(std::remove_if(nm.begin(), nm.end(), [](char ch) { return ch == '(' || ch == ')'; }), nm.end());
      write("char-" + nm + "-eps0.5.txt", os.str());
    }
  } else {
    throw std::invalid_argument("unknown fixture kind '" + kind + "' (loop-ops, graphs, char-tables)");
  }
  return written;
}

}  // namespace lf
