#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lf {

using cplx = std::complex<double>;
using Rng = std::mt19937_64;

/** Raised when a certified numerical procedure fails to converge. */
struct CertificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Family { U, SU, SO };

struct GroupSpec {
  Family family = Family::U;
  int N = 1;

  int beta() const { return family == Family::SO ? 1 : 2; }
  int gamma() const { return family == Family::SU ? 1 : 0; }
  int lie_dim() const;
  bool is_real() const { return family == Family::SO; }
  std::string name() const;
  static GroupSpec parse(const std::string& text);

  bool operator==(const GroupSpec&) const = default;
};

/** Dense N x N complex matrix, N <= 3, stored with row stride 3. */
struct Mat {
  int n = 1;
  std::array<cplx, 9> a{};

  Mat() = default;
  explicit Mat(int size) : n(size) {}

  cplx& operator()(int i, int j) { return a[i * 3 + j]; }
  const cplx& operator()(int i, int j) const { return a[i * 3 + j]; }

  static Mat eye(int size);
  cplx trace() const;
  Mat adjoint() const;
  cplx det() const;
  double norm() const;  // Frobenius

  Mat& operator+=(const Mat& o);
  Mat& operator-=(const Mat& o);
  Mat& operator*=(cplx s);
};

Mat operator*(const Mat& x, const Mat& y);
Mat operator+(Mat x, const Mat& y);
Mat operator-(Mat x, const Mat& y);
Mat operator*(cplx s, Mat x);

using GroupElement = Mat;

struct LieVector {
  std::vector<double> coords;
};

GroupElement identity(const GroupSpec& spec);
GroupElement multiply(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& a);
cplx trace_normalized(const GroupElement& a);

/** Max-norm distance of Q Q* from I, plus |det - 1| for SU and SO. */
double membership_defect(const GroupSpec& spec, const GroupElement& q);

GroupElement haar_sample(const GroupSpec& spec, Rng& rng);

/** Orthonormal basis {L_j} under <X,Y> = (beta N / 2) Re Tr(X* Y). */
const std::vector<Mat>& lie_basis(const GroupSpec& spec);
double inner_product(const GroupSpec& spec, const Mat& x, const Mat& y);
Mat lie_matrix(const GroupSpec& spec, const LieVector& v);

Mat expm(const Mat& a);
GroupElement exp_map(const GroupSpec& spec, const LieVector& v);

cplx directional_derivative(const std::function<cplx(const GroupElement&)>& f,
                            const Mat& x, const GroupElement& a, double h = 1e-5);

double casimir_standard(const GroupSpec& spec);

LieVector gaussian_lie_sample(const GroupSpec& spec, Rng& rng, double sigma);

/** Gram-Schmidt re-orthonormalisation, then determinant fix for SU/SO. */
GroupElement reproject(const GroupSpec& spec, const GroupElement& q);

/** Eigen-angles of a torus element; Tr Q = sum exp(i theta_j). */
std::vector<double> eigen_angles(const GroupSpec& spec, const std::vector<double>& torus);
GroupElement torus_element(const GroupSpec& spec, const std::vector<double>& torus);

/** Splitmix-style counter hash used to derive per-stream seeds. */
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace lf
