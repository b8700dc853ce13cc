#include <doctest.h>

#include <cmath>
#include <set>

#include "loopfield/action.hpp"
#include "loopfield/driver.hpp"
#include "loopfield/mm.hpp"

using namespace lf;

namespace {

double eval_crossing_sum(const PlanarLoopGraph& g, const CrossingFaces& cf, DerivBackend b) {
  return area_derivative(g, cf.f[0], b) - area_derivative(g, cf.f[1], b) + area_derivative(g, cf.f[2], b) -
         area_derivative(g, cf.f[3], b);
}

LoopString lobes(const AnnotatedLoop& f) {
  size_t x = f.ann.e.front();
  auto occ = occurrences(f.loop, f.loop[x]);
  REQUIRE(occ.size() == 2);
  return split_positive(f.loop, f.loop[occ[0]], occ[0], occ[1]);
}

}  // namespace

TEST_CASE("plaquette graph") {
  auto g = build_graph(plaquette(0, 0), 0.5);
  int bounded = 0;
  for (const auto& f : g.faces)
    if (f.bounded) {
      ++bounded;
      CHECK(f.area == doctest::Approx(0.25));
      CHECK(f.cells == 1);
      CHECK(f.winding == 1);
    }
  CHECK(bounded == 1);
  CHECK(g.euler_ok());
  auto gi = build_graph(plaquette(0, 0).inverse(), 0.5);
  for (const auto& f : gi.faces)
    if (f.bounded) CHECK(f.winding == -1);
}

TEST_CASE("doubling a loop doubles windings") {
  Rng rng(51);
  int done = 0;
  while (done < 30) {
    Loop l = random_loop(rng, 30, 4);
    if (l.trivial()) continue;
    Word w = l.word();
    Word ww = w;
    ww.insert(ww.end(), w.begin(), w.end());
    Loop d = make_loop(ww);
    auto h1 = winding_histogram(LoopString{{l}}), h2 = winding_histogram(LoopString{{d}});
    std::map<int, long> doubled;
    for (auto [n, c] : h1) doubled[2 * n] += c;
    CHECK(h2 == doubled);
    auto g = build_graph(l, 0.25);
    CHECK(g.euler_ok());
    ++done;
  }
}

TEST_CASE("Euler relation on figure-eight, lobes and strings") {
  for (auto a : {figure_eight({0.5, 1.0, 0.5, 1.5}, 0.25), square_lobes(0.5625, 0.5625, 0.25),
                 opposed_lobes(0.5625, 0.5625, 0.25)})
    CHECK(build_graph(a.loop, 0.25).euler_ok());
  auto m = merger_pair(0.5, 1.0, 1.0, 0.25);
  CHECK(build_graph(m.s, 0.25).euler_ok());
}

TEST_CASE("simple loop values") {
  CHECK(simple_loop_expectation({Family::U, 2}, 1.0, std::nullopt) == doctest::Approx(std::exp(-0.5)));
  CHECK(simple_loop_expectation({Family::U, 1}, 1.0, std::nullopt) == doctest::Approx(std::exp(-0.5)));
  CHECK(simple_loop_expectation({Family::SU, 2}, 1.0, std::nullopt) == doctest::Approx(std::exp(-3.0 / 8)));
  CHECK(simple_loop_expectation({Family::SO, 3}, 1.5, std::nullopt) == doctest::Approx(std::exp(-0.5)));
  double a1 = char_coefficient("1", {0.25, {Family::U, 1}});
  CHECK(simple_loop_expectation({Family::U, 1}, 1.0, 0.25) == doctest::Approx(std::pow(a1, 16)));
  CHECK_THROWS(simple_loop_expectation({Family::U, 1}, 1.0, 0.3));

  AnnotatedLoop r = rectangle_loop(1.0, 0.25);
  CHECK(r.loop.size() == 16);
  CHECK(r.cells.at(0) == 16);
  auto g = build_graph(r.loop, 0.25);
  CHECK(u1_expectation_discrete(g, 0.25) == doctest::Approx(std::pow(a1, 16)).epsilon(1e-12));
  CHECK(u1_expectation_continuum(g) == doctest::Approx(std::exp(-0.5)));

  U1Exact ex(0.25);
  CHECK(ex.value(Loop()) == 1.0);
  CHECK(ex.value(LoopString{}) == 1.0);
}

TEST_CASE("discrete to continuum gap shrinks") {
  std::vector<double> gap;
  for (double e : {0.25, 0.125, 0.0625}) {
    auto f = figure_eight({0.5, 1.0, 0.5, 1.5}, e);
    auto g = build_graph(f.loop, e);
    gap.push_back(std::abs(u1_expectation_discrete(g, e) - u1_expectation_continuum(g)));
  }
  CHECK(strictly_decreasing(gap));
}

TEST_CASE("figure-eight geometry") {
  const std::array<double, 4> t{0.5, 1.0, 0.5, 1.5};
  auto f = figure_eight(t, 0.25);
  auto g = build_graph(f.loop, 0.25);
  auto cf = crossing_faces(g, f.face_cells);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(g.faces[cf.f[i]].area - t[i]) <= 2 * 0.25);
    CHECK(g.faces[cf.f[i]].bounded);
  }
  // square lobes: windings +1 and -1
  auto sq = square_lobes(0.5625, 0.5625, 0.25);
  auto hs = winding_histogram(LoopString{{sq.loop}});
  auto gs = build_graph(sq.loop, 0.25);
  std::set<int> w;
  for (const auto& fc : gs.faces)
    if (fc.bounded) w.insert(fc.winding);
  CHECK(w == std::set<int>{-1, 1});
  CHECK(hs.at(1) == 2 * 9);
}

TEST_CASE("area derivatives") {
  auto r = build_graph(rectangle_loop(1.0, 0.25).loop, 0.25);
  for (size_t i = 0; i < r.faces.size(); ++i)
    if (r.faces[i].bounded)
      CHECK(area_derivative(r, int(i), DerivBackend::Analytic) == doctest::Approx(-0.5 * std::exp(-0.5)));
  CHECK_THROWS(area_derivative(r, 0, DerivBackend::Analytic));
  Rng rng(52);
  double worst = 0;
  for (int k = 0; k < 40; ++k) {
    Loop l = random_loop(rng, 40, 4);
    if (l.trivial()) continue;
    auto g = build_graph(l, 0.5);
    for (size_t i = 0; i < g.faces.size(); ++i)
      if (g.faces[i].bounded)
        worst = std::max(worst, std::abs(area_derivative(g, int(i), DerivBackend::Analytic) -
                                         area_derivative(g, int(i), DerivBackend::FiniteDifference)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("crossing identities on U(1)") {
  auto f = figure_eight({0.5, 1.0, 0.5, 1.5}, 0.125);
  auto g = build_graph(f.loop, 0.125);
  auto cf = crossing_faces(g, f.face_cells);
  const double ew = u1_expectation_continuum(g);
  auto gl = build_graph(lobes(f), 0.125);
  const double split = u1_expectation_continuum(gl);
  CHECK(std::abs(eval_crossing_sum(g, cf, DerivBackend::Analytic) - split) < 1e-8);

  auto d = [&](int i) { return area_derivative(g, cf.f[i - 1], DerivBackend::Analytic); };
  double i1 = correction_term_Im(g, cf, 1), i3 = correction_term_Im(g, cf, 3);
  CHECK(std::abs(2 * (d(1) - d(4)) + 2 * i1 - ew) < 1e-6);
  CHECK(std::abs(2 * (d(3) - d(2)) + 2 * i3 - ew) < 1e-6);
  CHECK(std::abs(2 * (d(1) - d(2) + d(3) - d(4)) + i1 + i3 - split - ew) < 1e-6);
  for (int m = 1; m <= 4; ++m)
    CHECK(std::abs(correction_term_Im(g, cf, m) - correction_term_Im_quadrature(g, cf, m, 24)) < 1e-10);
}
