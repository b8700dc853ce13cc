#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

#include "loopfield/action.hpp"

using namespace lf;

namespace {
const GroupSpec U1{Family::U, 1}, U2{Family::U, 2}, SU2{Family::SU, 2}, SO3{Family::SO, 3};
constexpr double kPi = std::numbers::pi;
}  // namespace

TEST_CASE("kappa and normalization") {
  CHECK(ActionParams{0.5, U1}.kappa() == doctest::Approx(4.0));
  CHECK(ActionParams{0.5, SO3}.kappa() == doctest::Approx(6.0));
  CHECK(ActionParams{0.5, U2}.kappa() == doctest::Approx(8.0));
  CHECK(std::abs(partition_Z({1e3, U1}) - 1.0) < 1e-6);

  double z = partition_Z({0.5, U1});
  double z1 = circle_trapezoid([](double th) { return std::exp(4 * std::cos(th) - 4); }, 200);
  double z2 = circle_trapezoid([](double th) { return std::exp(4 * std::cos(th) - 4); }, 400);
  CHECK(std::abs(z1 - z2) < 1e-10);
  CHECK(std::abs(z - z2) < 1e-10);
  CHECK(z == doctest::Approx(boost::math::cyl_bessel_i(0, 4.0) * std::exp(-4.0)).epsilon(1e-10));
}

TEST_CASE("Z by Weyl reduction against Haar Monte-Carlo") {
  ActionParams p{0.7, SU2};
  Rng rng(21);
  const int n = 400000;
  double s = 0, s2 = 0;
  for (int k = 0; k < n; ++k) {
    double w = std::exp(-p.kappa() * (2.0 - haar_sample(SU2, rng).trace().real()));
    s += w;
    s2 += w * w;
  }
  double m = s / n, sd = std::sqrt((s2 / n - m * m) / n);
  CHECK(std::abs(partition_Z(p) - m) <= 3 * sd);
}

TEST_CASE("density symmetries") {
  Rng rng(22);
  for (const auto& g : {U1, U2, SU2, SO3}) {
    WilsonAction act({0.6, g});
    CHECK(act.density(identity(g)) == doctest::Approx(1.0 / act.Z()));
    for (int k = 0; k < 20; ++k) {
      Mat a = haar_sample(g, rng), b = haar_sample(g, rng);
      double d = act.density(b);
      CHECK(act.density(inverse(b)) == doctest::Approx(d).epsilon(1e-12));
      CHECK(act.density(a * b * inverse(a)) == doctest::Approx(d).epsilon(1e-10));
      CHECK(d <= act.density(identity(g)) * (1 + 1e-12));
    }
  }
}

TEST_CASE("character coefficients") {
  for (const auto& g : {U1, SU2, SO3}) CHECK(char_coefficient("0", {0.5, g}) == doctest::Approx(1.0));
  CHECK(char_coefficient("(0,0)", {0.5, U2}) == doctest::Approx(1.0));
  CHECK(char_coefficient("trivial", {0.5, GroupSpec{Family::SU, 3}}) == doctest::Approx(1.0));

  double bessel = boost::math::cyl_bessel_i(1, 4.0) / boost::math::cyl_bessel_i(0, 4.0);
  CHECK(std::abs(char_coefficient("1", {0.5, U1}) - bessel) < 1e-10);
  auto q = [](int n) {
    double num = circle_trapezoid([](double th) { return std::cos(th) * std::exp(4 * std::cos(th) - 4); }, n);
    double den = circle_trapezoid([](double th) { return std::exp(4 * std::cos(th) - 4); }, n);
    return num / den;
  };
  CHECK(std::abs(q(10000) - q(20000)) < 1e-10);
  CHECK(std::abs(u1_coefficients(0.5, 3)[1] - bessel) < 1e-12);

  // |a_std - e^{-eps^2/2}| <= C eps^4 on U(2)
  double worst = 0;
  for (double e : {0.4, 0.2, 0.1})
    worst = std::max(worst, std::abs(char_coefficient("std", {e, U2}) - std::exp(-e * e / 2)) / std::pow(e, 4));
  CHECK(worst < 1.0);

  for (const auto& g : {U1, SU2, SO3, U2}) {
    auto t = CharCoeffTable::build(g, 0.5, 4);
    for (double a : t.a) {
      CHECK(a > 0);
      CHECK(a <= 1 + 1e-12);
    }
    for (size_t i = 0; i < t.a.size(); ++i)
      for (size_t j = 0; j < t.a.size(); ++j)
        if (t.irreps[i].c < t.irreps[j].c - 1e-12) CHECK(t.a[i] <= t.a[j] + 1e-12);
  }
  CHECK_THROWS(char_coefficient("x", {0.5, U1}));
}

TEST_CASE("convolution powers") {
  auto t = CharCoeffTable::build(U1, 0.5, 30);
  auto t1 = convolution_power(t, 1);
  CHECK(t1.a == t.a);
  auto t4 = convolution_power(t, 4);

  // direct 4-fold circular convolution of the density on a grid
  const int n = 512;
  WilsonAction act({0.5, U1});
  std::vector<double> f(n), g(n);
  for (int k = 0; k < n; ++k) f[k] = act.density_eig({-kPi + 2 * kPi * k / n});
  g = f;
  for (int r = 1; r < 4; ++r) {
    std::vector<double> h(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) h[i] += g[j] * f[((i - j + n + n / 2) % n)];
    for (double& v : h) v /= n;
    g = h;
  }
  double worst = 0;
  for (int k = 0; k < n; k += 7) {
    double th = -kPi + 2 * kPi * k / n;
    worst = std::max(worst, std::abs(g[k] - t4.spectral_density({th})));
  }
  CHECK(worst < 1e-8);

  // a_std^{t/eps^2} -> e^{-t/2}, gap shrinking about 4x per halving
  std::vector<double> gap;
  for (double e : {0.25, 0.125, 0.0625}) {
    long k = std::lround(1.0 / (e * e));
    gap.push_back(std::abs(std::pow(char_coefficient("std", {e, U2}), double(k)) - std::exp(-0.5)));
  }
  CHECK(gap[0] / gap[1] > 3.5);
  CHECK(gap[1] / gap[2] > 3.5);
}

TEST_CASE("heat kernel") {
  for (double th : {-3.0, -1.0, 0.0, 0.4, 2.5})
    CHECK(std::abs(u1_heat_kernel(th, 1.0) - u1_wrapped_gaussian(th, 1.0)) < 1e-10);
  CHECK(std::abs(circle_trapezoid([](double th) { return u1_heat_kernel(th, 1.0); }, 256) - 1.0) < 1e-10);
  auto hv = heat_kernel_eval(U1, {0.7}, 1.0);
  CHECK(std::abs(hv.value - u1_heat_kernel(0.7, 1.0)) < 1e-10);
  CHECK(hv.tail < 1e-12);
  CHECK_THROWS(heat_kernel_eval(U1, {0.7}, 0.0));

  // p_t * p_s = p_{t+s}
  const int n = 256;
  double worst = 0;
  for (double th : {0.0, 1.3, -2.2}) {
    double c = circle_trapezoid([&](double p) { return u1_heat_kernel(th - p, 0.6) * u1_heat_kernel(p, 0.9); }, n);
    worst = std::max(worst, std::abs(c - u1_heat_kernel(th, 1.5)));
  }
  CHECK(worst < 1e-9);

  for (const auto& g : {SU2, SO3, U2}) {
    double z = integrate_class(g, [&](const std::vector<double>& eig) { return heat_kernel_eval(g, eig, 1.0).value; });
    CHECK(z == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("rounded time") {
  CHECK(rounded_time(1.0, 0.25) == doctest::Approx(1.0));
  CHECK(plaquette_count(1.0, 0.25) == 16);
  CHECK(plaquette_count(0.5, 0.3) == 6);
}

TEST_CASE("Gaussian lemma") {
  TestFunction zero{"zero", [](const GroupElement&) { return 0.0; }, [](const std::vector<double>&) { return 0.0; }, 0.0};
  auto r0 = gaussian_lemma_check(U2, zero, {0.4, 0.2});
  for (double e : r0.error) CHECK(e == 0);

  TestFunction f{"re tr(I-Q)",
                 [](const GroupElement& q) { return 1.0 - trace_normalized(q).real(); },
                 [](const std::vector<double>& eig) {
                   double s = 0;
                   for (double a : eig) s += std::cos(a);
                   return 1.0 - s / double(eig.size());
                 },
                 std::nullopt};
  auto r = gaussian_lemma_check(U2, f, {0.4, 0.28, 0.2, 0.14, 0.1});
  CHECK(r.laplacian == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.slope >= 3.5);
  CHECK(r.slope <= 4.5);
  CHECK(loglog_slope({1, 2, 4}, {1, 4, 16}) == doctest::Approx(2.0));
}

TEST_CASE("J lemmas on U(1)") {
  auto j0 = lemma_J1_check(0.0, 0.0, 1.0, {0.4, 0.2});
  for (size_t i = 0; i < j0.eps.size(); ++i) {
    CHECK(std::abs(j0.lhs[i]) < 1e-10);
    CHECK(std::abs(j0.rhs[i]) < 1e-10);
  }
  auto [l2, r2] = lemma_J_check(0.3, 1.1, 0.2);
  auto [l1, r1] = lemma_J_check(0.3, 1.1, 0.1);
  CHECK(std::abs(l1 - r1) < std::abs(l2 - r2));
  CHECK(std::abs(l1 - r1) < 0.05);
  auto j = lemma_J1_check(0.3, 1.1, 1.0, {0.4, 0.2, 0.1});
  REQUIRE(j.gap.size() == 3);
  CHECK(j.gap[2] < j.gap[1]);
  CHECK(j.gap[1] < j.gap[0]);
}
