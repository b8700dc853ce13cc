#include "loopfield/action.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace lf {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

int torus_rank(const GroupSpec& spec) {
  switch (spec.family) {
    case Family::U: return spec.N;
    case Family::SU: return spec.N - 1;
    case Family::SO: return 1;
  }
  return 1;
}

double re_tr_one_minus(const GroupSpec&, const std::vector<double>& eig) {
  double s = 0;
  for (double t : eig) s += 1.0 - std::cos(t);
  return s;
}

double weyl_density(const GroupSpec& spec, const std::vector<double>& eig) {
  if (spec.family == Family::SO) return spec.N == 2 ? 1.0 : 1.0 - std::cos(eig[0]);
  double p = 1.0, fact = 1.0;
  for (size_t j = 0; j < eig.size(); ++j) {
    fact *= double(j + 1);
    for (size_t k = j + 1; k < eig.size(); ++k) p *= 2.0 - 2.0 * std::cos(eig[j] - eig[k]);
  }
  return p / fact;
}

std::vector<double> integrate_class(const GroupSpec& spec, int ncomp, const TorusIntegrand& f, double tol) {
  const int r = torus_rank(spec);
  const int max_nodes = r == 1 ? (1 << 20) : r == 2 ? (1 << 12) : (1 << 9);
  std::vector<double> prev, cur(ncomp), val(ncomp);
  std::vector<double> torus(r);
  for (int n = 16; n <= max_nodes; n *= 2) {
    std::fill(cur.begin(), cur.end(), 0.0);
    long total = 1;
    for (int i = 0; i < r; ++i) total *= n;
    std::vector<int> idx(r, 0);
    for (long m = 0; m < total; ++m) {
      for (int i = 0; i < r; ++i) torus[i] = -kPi + 2.0 * kPi * idx[i] / n;
      auto eig = eigen_angles(spec, torus);
      double w = weyl_density(spec, eig);
      if (w != 0.0) {
        f(eig, val);
        for (int c = 0; c < ncomp; ++c) cur[c] += w * val[c];
      }
      for (int i = 0; i < r; ++i) {
        if (++idx[i] < n) break;
        idx[i] = 0;
      }
    }
    for (auto& c : cur) c /= double(total);
    if (!prev.empty()) {
      double scale = 0, diff = 0;
      for (int c = 0; c < ncomp; ++c) {
        scale = std::max(scale, std::abs(cur[c]));
        diff = std::max(diff, std::abs(cur[c] - prev[c]));
      }
      if (diff <= tol * std::max(scale, 1e-300)) return cur;
    }
    prev = cur;
  }
  throw CertificationError("torus quadrature did not converge for " + spec.name());
}

double integrate_class(const GroupSpec& spec, const std::function<double(const std::vector<double>&)>& f,
                       double tol) {
  return integrate_class(
      spec, 1, [&](const std::vector<double>& eig, std::vector<double>& out) { out[0] = f(eig); }, tol)[0];
}

double circle_trapezoid(const std::function<double(double)>& f, int n) {
  double s = 0;
  for (int k = 0; k < n; ++k) s += f(-kPi + 2.0 * kPi * k / n);
  return s / n;
}

double partition_Z(const ActionParams& p) {
  const double kap = p.kappa();
  return integrate_class(p.spec, [&](const std::vector<double>& eig) {
    return std::exp(-kap * re_tr_one_minus(p.spec, eig));
  });
}

WilsonAction::WilsonAction(const ActionParams& p) : p_(p), z_(partition_Z(p)) {}

double WilsonAction::density(const GroupElement& q) const {
  double re = double(q.n) - q.trace().real();
  return std::exp(-p_.kappa() * re) / z_;
}

double WilsonAction::density_eig(const std::vector<double>& eig) const {
  return std::exp(-p_.kappa() * re_tr_one_minus(p_.spec, eig)) / z_;
}

double wilson_density(const GroupElement& q, const ActionParams& p) { return WilsonAction(p).density(q); }

bool has_ladder(const GroupSpec& spec) {
  return (spec.family == Family::U && spec.N <= 2) || (spec.family == Family::SU && spec.N == 2) ||
         (spec.family == Family::SO && spec.N == 3);
}

namespace {

std::string su2_label(int k) { return k % 2 == 0 ? std::to_string(k / 2) : std::to_string(k) + "/2"; }

Irrep make_irrep(const GroupSpec& spec, std::vector<int> w) {
  Irrep t;
  t.w = w;
  if (spec.family == Family::U && spec.N == 1) {
    t.label = std::to_string(w[0]);
    t.d = 1;
    t.c = -double(w[0]) * w[0];
  } else if (spec.family == Family::SU) {
    int k = w[0];
    t.label = su2_label(k);
    t.d = k + 1;
    t.c = -0.5 * k * (0.5 * k + 1.0);
  } else if (spec.family == Family::SO) {
    int l = w[0];
    t.label = std::to_string(l);
    t.d = 2 * l + 1;
    t.c = -double(l) * (l + 1) / 3.0;
  } else {
    int m1 = w[0], m2 = w[1];
    t.label = "(" + std::to_string(m1) + "," + std::to_string(m2) + ")";
    t.d = m1 - m2 + 1;
    t.c = -0.5 * (double(m1) * (m1 + 1) + double(m2) * (m2 - 1));
  }
  return t;
}

cplx geometric(cplx z, int count) {
  if (std::abs(z - 1.0) < 1e-6) {
    cplx s = 0, p = 1;
    for (int k = 0; k < count; ++k, p *= z) s += p;
    return s;
  }
  return (std::pow(z, count) - 1.0) / (z - 1.0);
}

}  // namespace

Irrep standard_irrep(const GroupSpec& spec) {
  if (!has_ladder(spec)) return {"std", {}, spec.N, casimir_standard(spec)};
  if (spec.family == Family::U && spec.N == 1) return make_irrep(spec, {1});
  if (spec.family == Family::U) return make_irrep(spec, {1, 0});
  return make_irrep(spec, {1});
}

int shell_of(const GroupSpec& spec, const Irrep& tau) {
  if (tau.w.empty()) return 1;
  if (spec.family == Family::U && spec.N == 2) return std::max(std::abs(tau.w[0]), std::abs(tau.w[1]));
  return std::abs(tau.w[0]);
}

std::vector<Irrep> ladder(const GroupSpec& spec, int L) {
  std::vector<Irrep> out;
  if (!has_ladder(spec)) {
    out.push_back({"0", {}, 1, 0.0});
    out.back().label = "trivial";
    out.push_back(standard_irrep(spec));
    return out;
  }
  if (spec.family == Family::U && spec.N == 1) {
    for (int n = -L; n <= L; ++n) out.push_back(make_irrep(spec, {n}));
  } else if (spec.family == Family::U) {
    for (int m1 = -L; m1 <= L; ++m1)
      for (int m2 = -L; m2 <= m1; ++m2) out.push_back(make_irrep(spec, {m1, m2}));
  } else {
    for (int k = 0; k <= L; ++k) out.push_back(make_irrep(spec, {k}));
  }
  return out;
}

Irrep irrep_from_label(const GroupSpec& spec, const std::string& label) {
  if (label == "std") return standard_irrep(spec);
  if (!has_ladder(spec)) {
    if (label == "trivial" || label == "0") return {"trivial", {}, 1, 0.0};
    throw std::invalid_argument("unsupported irrep for " + spec.name() + ": " + label);
  }
  int a = 0, b = 0;
  char tail = 0;
  if (spec.family == Family::U && spec.N == 2) {
    if (std::sscanf(label.c_str(), " (%d,%d)%c", &a, &b, &tail) != 2 || b > a)
      throw std::invalid_argument("bad U(2) label: " + label);
    return make_irrep(spec, {a, b});
  }
  if (spec.family == Family::SU) {
    if (std::sscanf(label.c_str(), "%d/2%c", &a, &tail) == 1 && label.find('/') != std::string::npos &&
        a >= 0)
      return make_irrep(spec, {a});
  }
  std::istringstream is(label);
  if (!(is >> a) || !is.eof()) throw std::invalid_argument("bad irrep label: " + label);
  if (spec.family == Family::SU) {
    if (a < 0) throw std::invalid_argument("bad irrep label: " + label);
    return make_irrep(spec, {2 * a});
  }
  if (spec.family == Family::SO && a < 0) throw std::invalid_argument("bad irrep label: " + label);
  return make_irrep(spec, {a});
}

cplx character(const GroupSpec& spec, const Irrep& tau, const std::vector<double>& eig) {
  if (tau.w.empty()) {
    if (tau.label == "trivial") return 1.0;
    cplx s = 0;
    for (double t : eig) s += std::polar(1.0, t);
    return s;
  }
  if (spec.family == Family::U && spec.N == 1) return std::polar(1.0, tau.w[0] * eig[0]);
  if (spec.family == Family::U) {
    int m1 = tau.w[0], m2 = tau.w[1];
    cplx lead = std::polar(1.0, m1 * eig[0] + m2 * eig[1]);
    return lead * geometric(std::polar(1.0, eig[1] - eig[0]), m1 - m2 + 1);
  }
  if (spec.family == Family::SU) {
    int k = tau.w[0];
    return std::polar(1.0, -k * eig[0]) * geometric(std::polar(1.0, 2.0 * eig[0]), k + 1);
  }
  int l = tau.w[0];
  return std::polar(1.0, -l * eig[0]) * geometric(std::polar(1.0, eig[0]), 2 * l + 1);
}

CharCoeffTable CharCoeffTable::build(const GroupSpec& spec, double eps, int cutoff) {
  CharCoeffTable t;
  t.spec = spec;
  t.eps = eps;
  t.cutoff = cutoff;
  t.irreps = ladder(spec, cutoff);
  const ActionParams p{eps, spec};
  const double kap = p.kappa();
  const int m = int(t.irreps.size());
  auto sums = integrate_class(spec, m + 1, [&](const std::vector<double>& eig, std::vector<double>& out) {
    double w = std::exp(-kap * re_tr_one_minus(spec, eig));
    out[0] = w;
    for (int i = 0; i < m; ++i) out[i + 1] = w * character(spec, t.irreps[i], eig).real();
  }, 1e-13);
  t.a.resize(m);
  for (int i = 0; i < m; ++i) t.a[i] = sums[i + 1] / (t.irreps[i].d * sums[0]);
  return t;
}

double CharCoeffTable::coeff(const std::string& label) const {
  for (size_t i = 0; i < irreps.size(); ++i)
    if (irreps[i].label == label) return a[i];
  throw std::invalid_argument("irrep not in table: " + label);
}

double CharCoeffTable::spectral_density(const std::vector<double>& eig) const {
  double s = 0;
  for (size_t i = 0; i < irreps.size(); ++i) s += irreps[i].d * a[i] * character(spec, irreps[i], eig).real();
  return s;
}

void CharCoeffTable::save(std::ostream& os) const {
  char buf[128];
  for (size_t i = 0; i < irreps.size(); ++i) {
    std::snprintf(buf, sizeof buf, " %d %.17g %.17g\n", irreps[i].d, irreps[i].c, a[i]);
    os << irreps[i].label << buf;
  }
}

CharCoeffTable CharCoeffTable::load(std::istream& is, const GroupSpec& spec, double eps, int cutoff) {
  CharCoeffTable t;
  t.spec = spec;
  t.eps = eps;
  t.cutoff = cutoff;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string label;
    int d;
    double c, a;
    if (!(ls >> label >> d >> c >> a)) throw std::runtime_error("bad char-table line: " + line);
    Irrep tau = irrep_from_label(spec, label);
    tau.d = d;
    tau.c = c;
    t.irreps.push_back(tau);
    t.a.push_back(a);
  }
  return t;
}

double char_coefficient(const std::string& label, const ActionParams& p) {
  Irrep tau = irrep_from_label(p.spec, label);
  const double kap = p.kappa();
  auto sums = integrate_class(p.spec, 2, [&](const std::vector<double>& eig, std::vector<double>& out) {
    double w = std::exp(-kap * re_tr_one_minus(p.spec, eig));
    out[0] = w;
    out[1] = w * character(p.spec, tau, eig).real();
  }, 1e-13);
  return sums[1] / (tau.d * sums[0]);
}

CharCoeffTable convolution_power(const CharCoeffTable& t, int k) {
  if (k < 1) throw std::invalid_argument("convolution power must be positive");
  CharCoeffTable out = t;
  for (auto& a : out.a) a = std::pow(a, k);
  return out;
}

std::vector<double> u1_coefficients(double eps, int nmax) {
  // a_n = I_n(k) / I_0(k), k = 1/eps^2, from r_n = I_n / I_{n-1} = 1 / (2n/k + r_{n+1})
  const double kap = 1.0 / (eps * eps);
  const int M = nmax + 64 + int(4.0 * kap);
  std::vector<double> r(M + 2, 0.0);
  for (int k = M; k >= 1; --k) r[k] = 1.0 / (2.0 * k / kap + r[k + 1]);
  std::vector<double> a(nmax + 1);
  a[0] = 1.0;
  for (int n = 1; n <= nmax; ++n) a[n] = a[n - 1] * r[n];
  return a;
}

double u1_heat_kernel(double theta, double t) {
  double s = 1.0;
  for (int n = 1;; ++n) {
    double w = std::exp(-0.5 * n * n * t);
    if (w < 1e-18) break;
    s += 2.0 * w * std::cos(n * theta);
  }
  return s;
}

double u1_wrapped_gaussian(double theta, double t) {
  double s = 0;
  for (int k = -50; k <= 50; ++k) {
    double x = theta + 2.0 * kPi * k;
    s += std::exp(-x * x / (2.0 * t));
  }
  return std::sqrt(2.0 * kPi / t) * s;
}

HeatKernelValue heat_kernel_eval(const GroupSpec& spec, const std::vector<double>& eig, double t) {
  if (!(t > 0)) throw std::invalid_argument("heat kernel needs t > 0");
  if (!has_ladder(spec)) throw std::invalid_argument("no character ladder for " + spec.name());
  HeatKernelValue hv;
  const int max_shell = 4000;
  for (int L = 0; L <= max_shell; ++L) {
    double bound = 0;
    auto add = [&](const Irrep& tau) {
      double w = tau.d * std::exp(0.5 * tau.c * t);
      hv.value += w * character(spec, tau, eig).real();
      bound += w * tau.d;
    };
    if (spec.family == Family::U && spec.N == 1) {
      add(make_irrep(spec, {L}));
      if (L) add(make_irrep(spec, {-L}));
    } else if (spec.family == Family::U) {
      for (int m1 = -L; m1 <= L; ++m1)
        for (int m2 = -L; m2 <= m1; ++m2)
          if (std::max(std::abs(m1), std::abs(m2)) == L) add(make_irrep(spec, {m1, m2}));
    } else {
      add(make_irrep(spec, {L}));
    }
    if (L >= 2 && bound < 1e-13) {
      hv.tail = 10.0 * bound;
      hv.cutoff = L;
      return hv;
    }
  }
  throw CertificationError("t too small for cutoff budget");
}

long plaquette_count(double t, double eps) { return std::lround(t / (eps * eps)); }
double rounded_time(double t, double eps) { return eps * eps * double(plaquette_count(t, eps)); }

double laplacian_at_identity(const GroupSpec& spec, const std::function<double(const GroupElement&)>& f) {
  const auto& basis = lie_basis(spec);
  const double f0 = f(identity(spec));
  auto second = [&](double h) {
    double s = 0;
    for (const Mat& Lj : basis) {
      Mat p = Lj, m = Lj;
      p *= h;
      m *= -h;
      s += f(expm(p)) + f(expm(m)) - 2.0 * f0;
    }
    return s / (h * h);
  };
  const double h = 1e-2;
  return (4.0 * second(h / 2) - second(h)) / 3.0;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

GaussLemmaReport gaussian_lemma_check(const GroupSpec& spec, const TestFunction& f,
                                      const std::vector<double>& eps_list) {
  GaussLemmaReport r;
  r.laplacian = f.laplacian_at_identity ? *f.laplacian_at_identity : laplacian_at_identity(spec, f.on_group);
  for (double eps : eps_list) {
    const double kap = ActionParams{eps, spec}.kappa();
    auto sums = integrate_class(spec, 2, [&](const std::vector<double>& eig, std::vector<double>& out) {
      double w = std::exp(-kap * re_tr_one_minus(spec, eig));
      out[0] = w;
      out[1] = w * f.on_torus(eig);
    }, 1e-13);
    double integral = sums[1] / sums[0];
    double target = 0.5 * eps * eps * r.laplacian;
    r.eps.push_back(eps);
    r.integral.push_back(integral);
    r.target.push_back(target);
    r.error.push_back(std::abs(integral - target));
  }
  bool all_positive = true;
  for (double e : r.error) all_positive = all_positive && e > 0;
  r.slope = all_positive && r.eps.size() >= 2 ? loglog_slope(r.eps, r.error) : 0.0;
  return r;
}

J1Report lemma_J1_check(double alpha1, double alpha2, double t, const std::vector<double>& eps_list) {
  J1Report r;
  const GroupSpec u1{Family::U, 1};
  const cplx I(0, 1);
  cplx lt = 0;
  for (int n = 1; n < 200; ++n) {
    double w = std::exp(-0.5 * n * n * t);
    if (w < 1e-18) break;
    lt += -2.0 * n * w * std::sin(n * alpha2);
  }
  const cplx rhs = I * std::polar(1.0, alpha1) * lt;
  for (double eps : eps_list) {
    const long k = plaquette_count(t, eps);
    const int nmax = 60;
    auto a = u1_coefficients(eps, nmax);
    std::vector<double> ak(nmax + 1);
    for (int n = 0; n <= nmax; ++n) ak[n] = std::pow(a[n], double(k));
    const double kap = 1.0 / (eps * eps);
    auto sums = integrate_class(u1, 2, [&](const std::vector<double>& eig, std::vector<double>& out) {
      double th = eig[0];
      double w = std::exp(-kap * (1.0 - std::cos(th)));
      double sk = 1.0;
      for (int n = 1; n <= nmax; ++n) sk += 2.0 * ak[n] * std::cos(n * (th + alpha2));
      out[0] = w;
      out[1] = w * std::sin(th) * sk;
    }, 1e-13);
    cplx lhs = I * std::polar(1.0, alpha1) * (sums[1] / sums[0]) / (eps * eps);
    r.eps.push_back(eps);
    r.lhs.push_back(lhs);
    r.rhs.push_back(rhs);
    r.gap.push_back(std::abs(lhs - rhs));
  }
  return r;
}

std::pair<cplx, cplx> lemma_J_check(double alpha1, double alpha2, double eps) {
  const GroupSpec u1{Family::U, 1};
  const double kap = 1.0 / (eps * eps);
  auto sums = integrate_class(u1, 2, [&](const std::vector<double>& eig, std::vector<double>& out) {
    double w = std::exp(-kap * (1.0 - std::cos(eig[0])));
    out[0] = w;
    out[1] = w * (std::cos(2.0 * eig[0]) - 1.0);
  }, 1e-13);
  cplx phase = std::polar(1.0, alpha1 + alpha2);
  return {phase * (sums[1] / sums[0]) / (2.0 * eps * eps), -phase};
}

}  // namespace lf
