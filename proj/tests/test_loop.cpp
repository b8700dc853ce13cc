#include <doctest.h>

#include <set>

#include "loopfield/driver.hpp"
#include "loopfield/harness.hpp"
#include "loopfield/loop.hpp"
#include "loopfield/mm.hpp"

using namespace lf;

namespace {

Word cat(Word a, const Word& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

bool clean(const Loop& l) {
  if (l.trivial()) return true;
  if (!is_closed_adjacent(l.word())) return false;
  for (size_t i = 0; i < l.size(); ++i)
    if (l[(i + 1) % l.size()] == l[i].inverse()) return false;
  return true;
}

long enclosed_cells(const Loop& l) {
  long n = 0;
  for (const auto& [w, c] : winding_histogram(LoopString{{l}})) n += c;
  return n;
}

}  // namespace

TEST_CASE("word-surgery oracles") {
  auto cases = loop_op_cases();
  REQUIRE(cases.size() >= 15);
  for (const auto& c : cases) {
    INFO(c.name);
    CHECK(c.got == c.expected);
    CHECK(c.match);
  }
}

TEST_CASE("make_loop erasure, rotation, errors") {
  Word a = moves_word({0, 0}, "RU"), back = moves_word({1, 1}, "RL"), b = moves_word({1, 1}, "LD");
  CHECK(make_loop(cat(cat(a, back), b)) == make_loop(cat(a, b)));

  Word p = moves_word({0, 0}, "RULD");
  Loop pl = make_loop(p);
  CHECK(pl.size() == 4);
  for (int r = 0; r < 4; ++r) {
    Word rot(p.begin() + r, p.end());
    rot.insert(rot.end(), p.begin(), p.begin() + r);
    CHECK(make_loop(rot) == pl);
  }
  CHECK_THROWS_AS(make_loop(moves_word({0, 0}, "RU")), LoopError);
  CHECK_THROWS_AS(make_loop(Word{{0, 0, R}, {3, 3, U}}), LoopError);
  CHECK_THROWS_AS(make_loop(moves_word({0, 0}, "RURD")), LoopError);  // not closed
  CHECK_THROWS_AS(make_loop(moves_word({0, 0}, "RL")), LoopError);
  CHECK(make_loop_or_trivial(moves_word({0, 0}, "RUDL")).trivial());
}

TEST_CASE("parse round trip and idempotence") {
  Rng rng(11);
  int seen = 0;
  for (int k = 0; k < 300; ++k) {
    Loop l = random_loop(rng, 24, 4);
    if (l.trivial()) continue;
    ++seen;
    CHECK(parse_loop(l.str()) == l);
    CHECK(parse_loop(l.str()).str() == l.str());
    CHECK(make_loop(l.word()) == l);
    CHECK(clean(l));
  }
  CHECK(seen > 100);
  CHECK(parse_loop("(0,0):RULD").str() == "(0,0):RULD");
  CHECK_THROWS_AS(parse_loop("0,0:RULD"), LoopError);
  LoopString s = parse_string("(0,0):RULD;(2,0):RULD");
  CHECK(parse_string(s.str()) == s);
}

TEST_CASE("split then merge recovers the loop") {
  Rng rng(12);
  int tried = 0;
  for (int k = 0; k < 4000 && tried < 1000; ++k) {
    Loop l = random_loop(rng, 40, 3);
    if (l.trivial()) continue;
    for (size_t x = 0; x < l.size(); ++x) {
      auto occ = occurrences(l, l[x]);
      if (occ.size() != 2 || occ[0] != x) continue;
      const Bond e = l[x];
      LoopString s = split_positive(l, e, occ[0], occ[1]);
      REQUIRE(s.loops.size() == 2);
      auto o0 = occurrences(s.loops[0], e), o1 = occurrences(s.loops[1], e);
      REQUIRE(o0.size() == 1);
      REQUIRE(o1.size() == 1);
      Loop m = merge_positive(s.loops[0], s.loops[1], e, o0[0], o1[0]);
      Loop m2 = merge_positive(s.loops[1], s.loops[0], e, o1[0], o0[0]);
      CHECK((m == l || m2 == l));
      CHECK(clean(s.loops[0]));
      CHECK(clean(s.loops[1]));
      ++tried;
      break;
    }
  }
  CHECK(tried >= 200);
}

TEST_CASE("deformation and expansion sets") {
  Rng rng(13);
  for (int k = 0; k < 200; ++k) {
    Loop l = random_loop(rng, 30, 4);
    if (l.trivial()) continue;
    size_t x = rng() % l.size();
    auto d = deformation_sets(l, l[x], x);
    CHECK(d.minus.size() == 2);
    CHECK(d.plus.size() == 2);
    for (const auto& v : d.minus) CHECK(clean(v));
    for (const auto& v : d.plus) CHECK(clean(v));
    auto ex = expansion_sets(l, l[x], x);
    CHECK(ex.plus.size() == 2);
    CHECK(ex.minus.size() == 2);
    for (const auto& s : ex.plus) CHECK(s.loops.at(0) == l);
    for (const auto& s : ex.minus) CHECK(s.loops.at(0) == l);
  }
  CHECK_THROWS_AS(deformation_sets(plaquette(0, 0), Bond{5, 5, R}, 0), LoopError);
}

TEST_CASE("rectangle deformation areas") {
  Loop r = make_loop(moves_word({0, 0}, "RRRUULLLDD"));
  for (size_t x = 0; x < r.size(); ++x) {
    auto d = deformation_sets(r, r[x], x);
    std::multiset<long> areas;
    for (const auto& v : d.minus) areas.insert(enclosed_cells(v));
    CHECK(areas == std::multiset<long>{5, 7});
  }
  auto d = deformation_sets(plaquette(0, 0), plaquette(0, 0)[0], 0);
  int trivial = 0;
  for (const auto& v : d.minus) trivial += v.trivial();
  CHECK(trivial == 1);
}

TEST_CASE("compatible triple count") {
  // |e| = 2, |e1| = |e3inv| = k: 2 k^2 triples of type 1
  for (size_t k : {1u, 2u, 3u, 5u}) {
    Word w = moves_word({0, 0}, std::string(2 + 2 * k, 'R') + "U" + std::string(2 + 2 * k, 'L') + "D");
    Loop l = make_loop(w);
    EdgeAnnotation a;
    a.e = {0, 1};
    for (size_t i = 0; i < k; ++i) {
      a.e1.push_back(2 + i);
      a.e3inv.push_back(2 + k + i);
    }
    a.e_bar = {0};
    a.e2 = {1};
    a.e4inv = {2};
    auto tr = compatible_triples(l, a);
    size_t t1 = 0;
    for (const auto& t : tr) t1 += t.type == 1;
    CHECK(t1 == 2 * k * k);
  }
  CHECK_THROWS_AS(compatible_triples(plaquette(0, 0), EdgeAnnotation{}), LoopError);
}

TEST_CASE("triples on the lattice figure-eight sit on consecutive edges") {
  AnnotatedLoop f = figure_eight({0.5, 1.0, 0.5, 1.5}, 0.25);
  auto tr = compatible_triples(f.loop, f.ann);
  CHECK(tr.size() == f.ann.e.size() * f.ann.e1.size() * f.ann.e3inv.size() +
                         f.ann.e_bar.size() * f.ann.e2.size() * f.ann.e4inv.size());
  for (const auto& t : tr) {
    CHECK(f.loop[t.x] == t.b);
    CHECK(f.loop[t.x1] == t.b1);
    CHECK(f.loop[t.x2] == t.b2);
  }
}

TEST_CASE("string lift") {
  LoopString s{{plaquette(0, 0), make_loop(moves_word({3, 0}, "RRUULLDD"))}};
  Loop two = make_loop(moves_word({0, 0}, "RRUULLDD"));
  LoopString r = replace_component(s, 1, {plaquette(3, 0), plaquette(4, 1)});
  CHECK(r.loops.size() == 3);
  CHECK(r.loops[0] == s.loops[0]);
  auto d = deformation_sets(two, two[0], 0);
  LoopString lifted = replace_component(LoopString{{plaquette(5, 5), two}}, 1, {d.minus[0]});
  CHECK(lifted.loops[0] == plaquette(5, 5));
  CHECK(replace_component(s, 0, {Loop()}).loops.size() == 1);
}
