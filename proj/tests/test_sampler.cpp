#include <doctest.h>

#include <cmath>
#include <numbers>

#include "loopfield/driver.hpp"
#include "loopfield/harness.hpp"
#include "loopfield/sampler.hpp"

using namespace lf;

namespace {
const GroupSpec U1{Family::U, 1}, SU2{Family::SU, 2}, SO3{Family::SO, 3};

Schedule small_schedule(long sweeps, std::uint64_t seed) {
  Schedule s;
  s.sweeps = sweeps;
  s.burn_in = 200;
  s.block = 100;
  s.chains = 2;
  s.seed = seed;
  return s;
}

std::vector<Mat> random_gauge(const LatticeBox& box, const GroupSpec& g, Rng& rng) {
  std::vector<Mat> out;
  for (size_t v = 0; v < box.n_vertices(); ++v) out.push_back(haar_sample(g, rng));
  return out;
}
}  // namespace

TEST_CASE("box indexing") {
  LatticeBox box{-1, 2, 3, 2};
  CHECK(box.n_bonds() == 3 * 3 + 4 * 2);
  for (size_t i = 0; i < box.n_bonds(); ++i) {
    Bond b = box.bond_at(i);
    CHECK(b.positive());
    CHECK(box.bond_index(b) == i);
    CHECK(box.bond_index(b.inverse()) == i);
  }
  for (size_t v = 0; v < box.n_vertices(); ++v) CHECK(box.vertex_index(box.vertex_at(v)) == v);
  CHECK_THROWS(box.bond_index(Bond{10, 10, R}));
  LatticeBox around = LatticeBox::around({LoopString{{plaquette(0, 0)}}}, 2);
  CHECK(around.W == 5);
  CHECK(around.H == 5);
}

TEST_CASE("cold and hot starts") {
  Rng rng(31);
  LatticeBox box{0, 0, 6, 6};
  auto cold = init_config(box, {0.5, SU2}, false, rng);
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 6; ++y) CHECK((plaquette_holonomy(cold, x, y) - Mat::eye(2)).norm() == 0);
  CHECK(total_action(cold) == 0);

  double s = 0, s2 = 0;
  long n = 0;
  for (int rep = 0; rep < 200; ++rep) {
    auto hot = init_config(box, {0.5, SU2}, true, rng);
    for (int x = 0; x < 6; ++x)
      for (int y = 0; y < 6; ++y) {
        double v = trace_normalized(plaquette_holonomy(hot, x, y)).real();
        s += v;
        s2 += v * v;
        ++n;
      }
  }
  double m = s / n;
  CHECK(std::abs(m) <= 3 * std::sqrt((s2 / n - m * m) / n));

  Rng a(5), b(5);
  auto h1 = init_config(box, {0.5, SO3}, true, a), h2 = init_config(box, {0.5, SO3}, true, b);
  for (size_t i = 0; i < h1.links.size(); ++i) CHECK(h1.links[i].a == h2.links[i].a);
}

TEST_CASE("local action delta equals the global difference") {
  Rng rng(32);
  for (const auto& g : {U1, SU2, SO3}) {
    LatticeBox box{0, 0, 4, 3};
    auto c = init_config(box, {0.4, g}, true, rng);
    for (size_t i = 0; i < box.n_bonds(); ++i) {
      Bond e = box.bond_at(i);
      CHECK(local_action_delta(c, e, c.links[i]) == 0);
      Mat q = haar_sample(g, rng);
      double before = total_action(c);
      double d = local_action_delta(c, e, q);
      auto c2 = c;
      c2.links[i] = q;
      CHECK(std::abs(total_action(c2) - before - d) < 1e-12 * std::max(1.0, std::abs(before)));
    }
  }
}

TEST_CASE("holonomy and Wilson values") {
  Rng rng(33);
  LatticeBox box{0, 0, 4, 4};
  auto c = init_config(box, {0.5, SU2}, true, rng);
  CHECK(wilson_value(c, LoopString{}) == cplx(1.0));
  Loop r = make_loop(moves_word({1, 1}, "RRUULLDD"));
  Mat h = holonomy(c, r);
  CHECK(std::abs(trace_normalized(holonomy(c, r.inverse())) - std::conj(trace_normalized(h))) < 1e-13);
  Mat prod = plaquette_holonomy(c, 1, 1);
  CHECK(std::abs(trace_normalized(prod) - wilson_value(c, LoopString{{plaquette(1, 1)}})) < 1e-13);
}

TEST_CASE("gauge transforms") {
  Rng rng(34);
  LatticeBox box{0, 0, 6, 6};
  for (const auto& g : {U1, SU2, SO3}) {
    auto c = init_config(box, {0.5, g}, true, rng);
    std::vector<Mat> id(box.n_vertices(), identity(g));
    auto same = gauge_transform(c, id);
    for (size_t i = 0; i < c.links.size(); ++i) CHECK((same.links[i] - c.links[i]).norm() < 1e-15);
    auto t = gauge_transform(c, random_gauge(box, g, rng));
    for (int x = 0; x < 6; ++x)
      for (int y = 0; y < 6; ++y)
        CHECK(std::abs(plaquette_holonomy(c, x, y).trace() - plaquette_holonomy(t, x, y).trace()) < 1e-12);
    int checked = 0;
    Rng lr(35);
    while (checked < 100) {
      Loop l = [&] {
        // random closed walk inside the box
        Point p{3, 3};
        Word w;
        for (int k = 0; k < 16; ++k) {
          Dir d = Dir(lr() % 4);
          Bond b{p.x, p.y, d};
          if (!box.contains(b)) continue;
          w.push_back(b);
          p = b.end();
        }
        while (p.x != 3) {
          Bond b{p.x, p.y, p.x < 3 ? R : L};
          w.push_back(b);
          p = b.end();
        }
        while (p.y != 3) {
          Bond b{p.x, p.y, p.y < 3 ? U : D};
          w.push_back(b);
          p = b.end();
        }
        return make_loop_or_trivial(w);
      }();
      if (l.trivial()) continue;
      LoopString s{{l}};
      CHECK(std::abs(wilson_value(c, s) - wilson_value(t, s)) < 1e-12);
      ++checked;
    }
  }
}

TEST_CASE("Metropolis and heat-bath statistics") {
  auto h = plaquette_histogram_test(0.5, 20, 100000, 3);
  CHECK(h.p_value > 0.01);
  auto d = detailed_balance_test(0.5, 8, 100000, 4);
  CHECK(d.p_value > 0.01);

  Rng rng(36);
  std::vector<double> u;
  for (int k = 0; k < 20000; ++k) u.push_back((std::arg(haar_sample(U1, rng)(0, 0)) + std::numbers::pi) / (2 * std::numbers::pi));
  CHECK(ks_uniform(u).second > 0.01);

  // von Mises mean resultant length is I1/I0
  double s = 0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) s += std::cos(sample_von_mises(4.0, rng));
  CHECK(s / n == doctest::Approx(char_coefficient("1", {0.5, U1})).epsilon(0.01));
}

TEST_CASE("acceptance after tuning, single plaquette identity") {
  for (const auto& g : {SU2, SO3}) {
    auto r = single_plaquette_check(g, 0.5, small_schedule(20000, 41), false);
    CHECK(r.passed());
  }
  Observables obs;
  obs.strings = {LoopString{{plaquette(0, 0)}}};
  auto res = run_chains(LatticeBox{0, 0, 2, 2}, {0.5, SU2}, obs, small_schedule(2000, 42), false);
  CHECK(res.acceptance >= 0.4);
  CHECK(res.acceptance <= 0.6);
}

TEST_CASE("U(1) rectangle against the exact value; trivial string") {
  AnnotatedLoop r = rectangle_cells(2, 1, 0.5);
  Observables obs;
  obs.strings = {LoopString{{r.loop}}, LoopString{}};
  Schedule s = small_schedule(20000, 43);
  s.heatbath = true;
  auto res = run_chains(LatticeBox::around(obs.strings, 2), {0.5, U1}, obs, s, true);
  double exact = std::pow(char_coefficient("1", {0.5, U1}), 2.0);
  CHECK(std::abs(res.strings[0].mean - exact) <= 3 * res.strings[0].sigma);
  CHECK(res.strings[1].mean == 1.0);
  CHECK(res.strings[1].sigma == 0.0);
}

TEST_CASE("reproducible serial and parallel") {
  Observables obs;
  obs.strings = {LoopString{{make_loop(moves_word({1, 1}, "RRULLD"))}}, LoopString{{plaquette(1, 1)}}};
  obs.combos = {{{0, 1.0}, {1, -2.0}}};
  LatticeBox box = LatticeBox::around(obs.strings, 1);
  Schedule s = small_schedule(500, 44);
  s.chains = 3;
  auto a = run_chains(box, {0.5, SU2}, obs, s, false);
  auto b = run_chains(box, {0.5, SU2}, obs, s, true);
  auto c = run_chains(box, {0.5, SU2}, obs, s, true);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(a.strings[i].mean == b.strings[i].mean);
    CHECK(a.strings[i].sigma == b.strings[i].sigma);
    CHECK(b.strings[i].mean == c.strings[i].mean);
  }
  CHECK(a.combos[0].mean == b.combos[0].mean);
  CHECK(std::abs(a.combos[0].mean - (a.strings[0].mean - 2 * a.strings[1].mean)) < 1e-12);
}

TEST_CASE("exactly representable gauges leave estimates bit-identical") {
  for (const auto& g : {U1, SU2, SO3}) {
    Schedule s = small_schedule(300, 45);
    s.chains = 1;
    CHECK(gauge_bit_identity(g, 0.5, s).passed());
  }
}

TEST_CASE("finite volume: box L and 2L agree") {
  Observables obs;
  obs.strings = {LoopString{{plaquette(0, 0)}}};
  Schedule s = small_schedule(8000, 46);
  auto a = run_chains(LatticeBox{-1, -1, 3, 3}, {0.5, SU2}, obs, s, true);
  auto b = run_chains(LatticeBox{-3, -3, 6, 6}, {0.5, SU2}, obs, s, true);
  double comb = std::hypot(a.strings[0].sigma, b.strings[0].sigma);
  CHECK(std::abs(a.strings[0].mean - b.strings[0].mean) <= 3 * comb);
}

TEST_CASE("LOOPFIELD_THREADS caps workers") {
  setenv("LOOPFIELD_THREADS", "1", 1);
  CHECK(worker_threads() == 1);
  unsetenv("LOOPFIELD_THREADS");
  CHECK(worker_threads() >= 1);
}
