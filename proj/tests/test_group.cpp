#include <doctest.h>

#include <cmath>

#include "loopfield/group.hpp"

using namespace lf;

namespace {
const GroupSpec U1{Family::U, 1}, U2{Family::U, 2}, U3{Family::U, 3}, SU2{Family::SU, 2}, SU3{Family::SU, 3},
    SO3{Family::SO, 3};
const GroupSpec kAll[] = {U1, U2, U3, SU2, SU3, SO3, {Family::SO, 2}};

double dist(const Mat& a, const Mat& b) { return (a - b).norm(); }
}  // namespace

TEST_CASE("spec constants") {
  CHECK(SO3.beta() == 1);
  CHECK(SU2.beta() == 2);
  CHECK(U2.beta() == 2);
  CHECK(SU2.gamma() == 1);
  CHECK(U2.gamma() == 0);
  CHECK(SO3.gamma() == 0);
  CHECK(GroupSpec::parse("SU(2)") == SU2);
  CHECK_THROWS(GroupSpec::parse("SU(1)"));
  CHECK_THROWS(GroupSpec::parse("Sp(2)"));
}

TEST_CASE("identity, multiply, inverse, trace") {
  Rng rng(1);
  CHECK(dist(identity(U2), Mat::eye(2)) == 0);
  CHECK(trace_normalized(identity(U3)) == cplx(1, 0));
  for (const auto& g : kAll) {
    Mat q = haar_sample(g, rng);
    CHECK(dist(multiply(identity(g), q), q) < 1e-15);
    CHECK(dist(inverse(identity(g)), identity(g)) == 0);
    CHECK(std::abs(trace_normalized(multiply(q, inverse(q))) - 1.0) < 1e-13);
  }
}

TEST_CASE("closure on random inputs") {
  Rng rng(2);
  for (const auto& g : kAll) {
    double worst = 0;
    for (int k = 0; k < 10000 / 7; ++k) {
      Mat a = haar_sample(g, rng), b = haar_sample(g, rng);
      worst = std::max({worst, membership_defect(g, multiply(a, b)), membership_defect(g, inverse(a)),
                        membership_defect(g, exp_map(g, gaussian_lie_sample(g, rng, 1.0)))});
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("Haar orthogonality oracles") {
  Rng rng(3);
  const int n = 1000000;
  double s = 0, s2 = 0, m = 0, m2 = 0;
  for (int k = 0; k < n; ++k) {
    double x = trace_normalized(haar_sample(SU2, rng)).real();
    s += x;
    s2 += x * x;
    double t = std::norm(haar_sample(SU2, rng).trace());
    m += t;
    m2 += t * t;
  }
  double mean = s / n, sd = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean) <= 3 * sd);
  double mt = m / n, sdt = std::sqrt((m2 / n - mt * mt) / n);
  CHECK(std::abs(mt - 1.0) <= 3 * sdt);

  double c = 0, c2 = 0;
  for (int k = 0; k < n; ++k) {
    double x = haar_sample(U1, rng)(0, 0).real();
    c += x;
    c2 += x * x;
  }
  double mc = c / n;
  CHECK(std::abs(mc) <= 3 * std::sqrt((c2 / n - mc * mc) / n));
}

TEST_CASE("lie basis orthonormal with the right dimension") {
  CHECK(lie_basis(U1).size() == 1);
  CHECK(lie_basis(SU2).size() == 3);
  CHECK(lie_basis(SO3).size() == 3);
  CHECK(lie_basis(U3).size() == 9);
  CHECK(lie_basis(SU3).size() == 8);
  for (const auto& g : kAll) {
    const auto& B = lie_basis(g);
    CHECK(int(B.size()) == g.lie_dim());
    double worst = 0;
    for (size_t i = 0; i < B.size(); ++i) {
      // skew-Hermitian, traceless for SU, real for SO
      worst = std::max(worst, (B[i] + B[i].adjoint()).norm());
      if (g.family != Family::U) worst = std::max(worst, std::abs(B[i].trace()));
      if (g.family == Family::SO)
        for (cplx z : B[i].a) worst = std::max(worst, std::abs(z.imag()));
      for (size_t j = 0; j < B.size(); ++j)
        worst = std::max(worst, std::abs(inner_product(g, B[i], B[j]) - (i == j ? 1.0 : 0.0)));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("Casimir constants and the basis sum") {
  CHECK(casimir_standard(U1) == doctest::Approx(-1.0));
  CHECK(casimir_standard(U3) == doctest::Approx(-1.0));
  CHECK(casimir_standard(SU2) == doctest::Approx(-0.75));
  CHECK(casimir_standard(SO3) == doctest::Approx(-2.0 / 3.0));
  for (const auto& g : kAll) {
    Mat s(g.N);
    for (const Mat& L : lie_basis(g)) s += L * L;
    Mat want = Mat::eye(g.N);
    want *= casimir_standard(g);
    CHECK(dist(s, want) < 1e-10);
  }
}

TEST_CASE("exp_map") {
  Rng rng(4);
  for (const auto& g : kAll) {
    LieVector z{std::vector<double>(g.lie_dim(), 0.0)};
    CHECK(dist(exp_map(g, z), identity(g)) < 1e-15);
    LieVector a = gaussian_lie_sample(g, rng, 0.7), ma = a;
    for (double& c : ma.coords) c = -c;
    CHECK(dist(multiply(exp_map(g, a), exp_map(g, ma)), identity(g)) < 1e-12);
  }
  // U(1): <L,L> = 1 means L = i, so exp(theta L) has angle theta
  const Mat& L = lie_basis(U1)[0];
  CHECK(std::abs(L(0, 0) - cplx(0, 1)) < 1e-15);
  CHECK(std::arg(exp_map(U1, {{0.8}})(0, 0)) == doctest::Approx(0.8));
}

TEST_CASE("directional derivatives") {
  Rng rng(5);
  auto tr = [](const Mat& q) { return trace_normalized(q); };
  for (const auto& g : {U2, SU2, SO3}) {
    for (const Mat& L : lie_basis(g)) {
      cplx want = L.trace() / double(g.N);
      CHECK(std::abs(directional_derivative(tr, L, identity(g)) - want) < 1e-9);
    }
    Mat a = haar_sample(g, rng);
    CHECK(std::abs(directional_derivative([](const Mat&) { return cplx(2.5); }, lie_basis(g)[0], a)) == 0);
  }
  // U(1) character: L_1 chi = i chi
  Mat a = haar_sample(U1, rng);
  cplx d = directional_derivative(tr, lie_basis(U1)[0], a);
  CHECK(std::abs(d - cplx(0, 1) * a(0, 0)) < 1e-9);
  // Richardson: halving h cuts the error by about 4
  auto f = [](const Mat& q) { return std::exp(trace_normalized(q)); };
  Mat X = lie_basis(SU2)[1];
  Mat b = haar_sample(SU2, rng);
  cplx exact = directional_derivative(f, X, b, 1e-4);
  double e1 = std::abs(directional_derivative(f, X, b, 0.1) - exact);
  double e2 = std::abs(directional_derivative(f, X, b, 0.05) - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("Gaussian Lie samples reproduce the Casimir") {
  Rng rng(6);
  for (const auto& g : {U2, SU2}) {
    const int n = 200000;
    Mat s(g.N), s2(g.N);
    double coord = 0;
    for (int k = 0; k < n; ++k) {
      LieVector v = gaussian_lie_sample(g, rng, 1.0);
      coord += v.coords[0];
      Mat A = lie_matrix(g, v);
      Mat A2 = A * A;
      s += A2;
      for (int i = 0; i < 9; ++i) s2.a[i] += cplx(A2.a[i].real() * A2.a[i].real(), A2.a[i].imag() * A2.a[i].imag());
    }
    CHECK(std::abs(coord / n) < 3.0 / std::sqrt(double(n)));
    for (int i = 0; i < g.N; ++i)
      for (int j = 0; j < g.N; ++j) {
        cplx m = s(i, j) / double(n);
        double want = i == j ? casimir_standard(g) : 0.0;
        double sd = std::sqrt(std::max(1e-30, s2(i, j).real() / n - m.real() * m.real()) / n);
        CHECK(std::abs(m.real() - want) <= 3 * sd + 1e-12);
      }
  }
}

TEST_CASE("split_seed streams differ") {
  CHECK(split_seed(1, 0) != split_seed(1, 1));
  CHECK(split_seed(1, 0) == split_seed(1, 0));
}
