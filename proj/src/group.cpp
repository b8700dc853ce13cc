#include "loopfield/group.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <regex>

namespace lf {

int GroupSpec::lie_dim() const {
  switch (family) {
    case Family::U: return N * N;
    case Family::SU: return N * N - 1;
    case Family::SO: return N * (N - 1) / 2;
  }
  return 0;
}

std::string GroupSpec::name() const {
  const char* f = family == Family::U ? "U" : family == Family::SU ? "SU" : "SO";
  return std::string(f) + "(" + std::to_string(N) + ")";
}

GroupSpec GroupSpec::parse(const std::string& text) {
  static const std::regex re(R"(^\s*(U|SU|SO)\s*\(?\s*([0-9]+)\s*\)?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw std::invalid_argument("bad group spec: " + text);
  GroupSpec s;
  s.family = m[1] == "U" ? Family::U : m[1] == "SU" ? Family::SU : Family::SO;
  s.N = std::stoi(m[2]);
  if (s.N < 1 || s.N > 3) throw std::invalid_argument("group size must be 1..3: " + text);
  if (s.family != Family::U && s.N < 2) throw std::invalid_argument("SU/SO need N >= 2: " + text);
  return s;
}

Mat Mat::eye(int size) {
  Mat m(size);
  for (int i = 0; i < size; ++i) m(i, i) = 1.0;
  return m;
}

cplx Mat::trace() const {
  cplx t = 0;
  for (int i = 0; i < n; ++i) t += (*this)(i, i);
  return t;
}

Mat Mat::adjoint() const {
  Mat m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = std::conj((*this)(j, i));
  return m;
}

cplx Mat::det() const {
  const Mat& m = *this;
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

double Mat::norm() const {
  double s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += std::norm((*this)(i, j));
  return std::sqrt(s);
}

Mat& Mat::operator+=(const Mat& o) {
  for (int i = 0; i < 9; ++i) a[i] += o.a[i];
  return *this;
}
Mat& Mat::operator-=(const Mat& o) {
  for (int i = 0; i < 9; ++i) a[i] -= o.a[i];
  return *this;
}
Mat& Mat::operator*=(cplx s) {
  for (auto& v : a) v *= s;
  return *this;
}

Mat operator*(const Mat& x, const Mat& y) {
  if (x.n != y.n) throw std::invalid_argument("matrix shape mismatch");
  Mat r(x.n);
  const int n = x.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cplx s = x(i, 0) * y(0, j);
      for (int k = 1; k < n; ++k) s += x(i, k) * y(k, j);
      r(i, j) = s;
    }
  return r;
}
Mat operator+(Mat x, const Mat& y) { return x += y; }
Mat operator-(Mat x, const Mat& y) { return x -= y; }
Mat operator*(cplx s, Mat x) { return x *= s; }

GroupElement identity(const GroupSpec& spec) { return Mat::eye(spec.N); }
GroupElement multiply(const GroupElement& a, const GroupElement& b) { return a * b; }
GroupElement inverse(const GroupElement& a) { return a.adjoint(); }
cplx trace_normalized(const GroupElement& a) { return a.trace() / double(a.n); }

double membership_defect(const GroupSpec& spec, const GroupElement& q) {
  Mat p = q * q.adjoint();
  double d = 0;
  for (int i = 0; i < q.n; ++i)
    for (int j = 0; j < q.n; ++j) d = std::max(d, std::abs(p(i, j) - (i == j ? 1.0 : 0.0)));
  if (spec.family != Family::U) d = std::max(d, std::abs(q.det() - 1.0));
  if (spec.is_real())
    for (const auto& v : q.a) d = std::max(d, std::abs(v.imag()));
  return d;
}

namespace {

void gram_schmidt(Mat& m) {
  const int n = m.n;
  for (int j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (int k = 0; k < j; ++k) {
        cplx dot = 0;
        for (int i = 0; i < n; ++i) dot += std::conj(m(i, k)) * m(i, j);
        for (int i = 0; i < n; ++i) m(i, j) -= dot * m(i, k);
      }
    double nr = 0;
    for (int i = 0; i < n; ++i) nr += std::norm(m(i, j));
    nr = std::sqrt(nr);
    for (int i = 0; i < n; ++i) m(i, j) /= nr;
  }
}

void fix_determinant(const GroupSpec& spec, Mat& q) {
  if (spec.family == Family::SU) {
    cplx phase = std::polar(1.0, -std::arg(q.det()) / spec.N);
    q *= phase;
  } else if (spec.family == Family::SO) {
    if (q.det().real() < 0)
      for (int i = 0; i < q.n; ++i) q(i, 0) = -q(i, 0);
  }
}

}  // namespace

GroupElement haar_sample(const GroupSpec& spec, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat z(spec.N);
  for (int i = 0; i < spec.N; ++i)
    for (int j = 0; j < spec.N; ++j)
      z(i, j) = spec.is_real() ? cplx(g(rng), 0.0) : cplx(g(rng), g(rng));
  gram_schmidt(z);
  fix_determinant(spec, z);
  return z;
}

GroupElement reproject(const GroupSpec& spec, const GroupElement& q) {
  Mat m = q;
  if (spec.is_real())
    for (auto& v : m.a) v = cplx(v.real(), 0.0);
  gram_schmidt(m);
  if (spec.family == Family::SU) fix_determinant(spec, m);
  return m;
}

namespace {

std::vector<Mat> build_basis(const GroupSpec& spec) {
  const int n = spec.N;
  const double sn = std::sqrt(double(n));
  const cplx I(0, 1);
  std::vector<Mat> out;
  if (spec.family == Family::U) {
    for (int k = 0; k < n; ++k) {
      Mat m(n);
      m(k, k) = I / sn;
      out.push_back(m);
    }
  } else if (spec.family == Family::SU) {
    for (int m1 = 1; m1 < n; ++m1) {
      Mat m(n);
      double s = 1.0 / std::sqrt(double(m1 * (m1 + 1))) / sn;
      for (int k = 0; k < m1; ++k) m(k, k) = I * s;
      m(m1, m1) = -I * double(m1) * s;
      out.push_back(m);
    }
  }
  if (spec.family == Family::SO) {
    for (int k = 0; k < n; ++k)
      for (int l = k + 1; l < n; ++l) {
        Mat m(n);
        m(k, l) = 1.0 / sn;
        m(l, k) = -1.0 / sn;
        out.push_back(m);
      }
    return out;
  }
  const double s2 = std::sqrt(2.0 * n);
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      Mat a(n), b(n);
      a(k, l) = 1.0 / s2;
      a(l, k) = -1.0 / s2;
      b(k, l) = I / s2;
      b(l, k) = I / s2;
      out.push_back(a);
      out.push_back(b);
    }
  return out;
}

}  // namespace

const std::vector<Mat>& lie_basis(const GroupSpec& spec) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::vector<Mat>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(int(spec.family), spec.N);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, build_basis(spec)).first;
  return it->second;
}

double inner_product(const GroupSpec& spec, const Mat& x, const Mat& y) {
  return 0.5 * spec.beta() * spec.N * (x.adjoint() * y).trace().real();
}

Mat lie_matrix(const GroupSpec& spec, const LieVector& v) {
  const auto& basis = lie_basis(spec);
  if (v.coords.size() != basis.size()) throw std::invalid_argument("LieVector dimension mismatch");
  Mat m(spec.N);
  for (size_t j = 0; j < basis.size(); ++j) m += cplx(v.coords[j]) * basis[j];
  return m;
}

Mat expm(const Mat& a) {
  double nrm = a.norm();
  int s = 0;
  if (nrm > 0.5) s = int(std::ceil(std::log2(nrm / 0.5)));
  Mat x = a;
  x *= std::ldexp(1.0, -s);
  Mat result = Mat::eye(a.n);
  Mat term = Mat::eye(a.n);
  for (int k = 1; k <= 20; ++k) {
    term = term * x;
    term *= 1.0 / k;
    result += term;
    if (term.norm() < 1e-18) break;
  }
  for (int i = 0; i < s; ++i) result = result * result;
  return result;
}

GroupElement exp_map(const GroupSpec& spec, const LieVector& v) {
  Mat q = expm(lie_matrix(spec, v));
  if (spec.is_real())
    for (auto& e : q.a) e = cplx(e.real(), 0.0);
  return q;
}

cplx directional_derivative(const std::function<cplx(const GroupElement&)>& f, const Mat& x,
                            const GroupElement& a, double h) {
  Mat xp = x, xm = x;
  xp *= h;
  xm *= -h;
  return (f(expm(xp) * a) - f(expm(xm) * a)) / (2.0 * h);
}

double casimir_standard(const GroupSpec& spec) {
  const double n = spec.N;
  switch (spec.family) {
    case Family::U: return -1.0;
    case Family::SU: return -1.0 + 1.0 / (n * n);
    case Family::SO: return -1.0 + 1.0 / n;
  }
  return 0;
}

LieVector gaussian_lie_sample(const GroupSpec& spec, Rng& rng, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
  std::normal_distribution<double> g(0.0, sigma);
  LieVector v;
  v.coords.resize(spec.lie_dim());
  for (auto& c : v.coords) c = g(rng);
  return v;
}

std::vector<double> eigen_angles(const GroupSpec& spec, const std::vector<double>& torus) {
  switch (spec.family) {
    case Family::U: return torus;
    case Family::SU: {
      std::vector<double> out = torus;
      double s = 0;
      for (double t : torus) s += t;
      out.push_back(-s);
      return out;
    }
    case Family::SO:
      if (spec.N == 2) return {torus[0], -torus[0]};
      return {torus[0], -torus[0], 0.0};
  }
  return {};
}

GroupElement torus_element(const GroupSpec& spec, const std::vector<double>& torus) {
  Mat q(spec.N);
  if (spec.family == Family::SO) {
    double c = std::cos(torus[0]), s = std::sin(torus[0]);
    q(0, 0) = c;
    q(0, 1) = -s;
    q(1, 0) = s;
    q(1, 1) = c;
    if (spec.N == 3) q(2, 2) = 1.0;
    return q;
  }
  auto th = eigen_angles(spec, torus);
  for (int i = 0; i < spec.N; ++i) q(i, i) = std::polar(1.0, th[i]);
  return q;
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace lf
