#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "loopfield/group.hpp"

namespace lf {

struct ActionParams {
  double eps = 0.5;
  GroupSpec spec;

  /** Coefficient of Re Tr(I - Q) in the exponent: beta_G N / (2 eps^2). */
  double kappa() const { return spec.beta() * spec.N / (2.0 * eps * eps); }
};

/** Re Tr(I - Q) from eigen-angles. */
double re_tr_one_minus(const GroupSpec& spec, const std::vector<double>& eig);

/** Weyl density of the Haar measure on the chosen torus coordinates (w.r.t. prod d theta / 2 pi). */
double weyl_density(const GroupSpec& spec, const std::vector<double>& eig);
int torus_rank(const GroupSpec& spec);

using TorusIntegrand = std::function<void(const std::vector<double>& eig, std::vector<double>& out)>;

/** Vector-valued class-function integral over G by trapezoid rule on the torus with node doubling. */
std::vector<double> integrate_class(const GroupSpec& spec, int ncomp, const TorusIntegrand& f,
                                    double tol = 1e-11);
double integrate_class(const GroupSpec& spec, const std::function<double(const std::vector<double>&)>& f,
                       double tol = 1e-11);

/** Plain trapezoid average over the circle with n nodes. */
double circle_trapezoid(const std::function<double(double)>& f, int n);

double partition_Z(const ActionParams& p);

class WilsonAction {
 public:
  explicit WilsonAction(const ActionParams& p);
  const ActionParams& params() const { return p_; }
  double Z() const { return z_; }
  double density(const GroupElement& q) const;
  double density_eig(const std::vector<double>& eig) const;

 private:
  ActionParams p_;
  double z_;
};

double wilson_density(const GroupElement& q, const ActionParams& p);

struct Irrep {
  std::string label;
  std::vector<int> w;  // U(1): {n}; SU(2): {2j}; SO(3): {l}; U(2): {m1, m2}; "std": {}
  int d = 1;
  double c = 0;
};

cplx character(const GroupSpec& spec, const Irrep& tau, const std::vector<double>& eig);
Irrep irrep_from_label(const GroupSpec& spec, const std::string& label);
Irrep standard_irrep(const GroupSpec& spec);
bool has_ladder(const GroupSpec& spec);
/** All irreps of shell index <= L (shell: |n|, 2j, l, or max(|m1|,|m2|)). */
std::vector<Irrep> ladder(const GroupSpec& spec, int L);
int shell_of(const GroupSpec& spec, const Irrep& tau);

struct CharCoeffTable {
  GroupSpec spec;
  double eps = 0;
  int cutoff = 0;
  std::vector<Irrep> irreps;
  std::vector<double> a;

  static CharCoeffTable build(const GroupSpec& spec, double eps, int cutoff);
  double coeff(const std::string& label) const;
  /** Sum d a chi at the given eigen-angles. */
  double spectral_density(const std::vector<double>& eig) const;

  void save(std::ostream& os) const;
  static CharCoeffTable load(std::istream& is, const GroupSpec& spec, double eps, int cutoff);
};

double char_coefficient(const std::string& label, const ActionParams& p);
CharCoeffTable convolution_power(const CharCoeffTable& t, int k);

/** U(1) coefficients a_n(eps), n = 0..nmax, from one quadrature pass. */
std::vector<double> u1_coefficients(double eps, int nmax);

struct HeatKernelValue {
  double value = 0;
  double tail = 0;
  int cutoff = 0;
};

HeatKernelValue heat_kernel_eval(const GroupSpec& spec, const std::vector<double>& eig, double t);
double u1_heat_kernel(double theta, double t);
double u1_wrapped_gaussian(double theta, double t);

/** t(eps) = eps^2 round(t / eps^2). */
double rounded_time(double t, double eps);
long plaquette_count(double t, double eps);

struct TestFunction {
  std::string name;
  std::function<double(const GroupElement&)> on_group;
  std::function<double(const std::vector<double>&)> on_torus;
  std::optional<double> laplacian_at_identity;
};

/** Sum_j second differences of f along exp(h L_j), Richardson-combined. */
double laplacian_at_identity(const GroupSpec& spec, const std::function<double(const GroupElement&)>& f);

struct GaussLemmaReport {
  std::vector<double> eps, integral, target, error;
  double laplacian = 0;
  double slope = 0;
};

GaussLemmaReport gaussian_lemma_check(const GroupSpec& spec, const TestFunction& f,
                                      const std::vector<double>& eps_list);

/** Least-squares slope of log(y) against log(x). */
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct J1Report {
  std::vector<double> eps, gap;
  std::vector<cplx> lhs, rhs;
};

J1Report lemma_J1_check(double alpha1, double alpha2, double t, const std::vector<double>& eps_list);

/** Limit of (1/2 eps^2) int tr((Q - Q^-1) a1) chi(Q a2) S dQ on U(1) at one eps, and the target. */
std::pair<cplx, cplx> lemma_J_check(double alpha1, double alpha2, double eps);

}  // namespace lf
