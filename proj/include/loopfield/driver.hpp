#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "loopfield/action.hpp"
#include "loopfield/loop.hpp"

namespace lf {

struct Face {
  double area = 0;      // t_F; lattice: eps^2 * cells
  long cells = 0;       // 0 for continuum-only faces
  int winding = 0;
  bool bounded = true;
  Point ref{};          // lower-left corner of one member cell (lattice graphs)
  std::vector<Bond> boundary;  // positively oriented bonds adjacent to the face
};

struct PlanarLoopGraph {
  double eps = 0;  // 0 for a purely continuum graph
  long V = 0, E = 0;
  int components = 1;
  std::vector<Face> faces;  // faces[0] is the unbounded face for lattice graphs
  std::map<Point, int> cell_face;

  int face_of_cell(Point cell) const;
  bool euler_ok() const { return V - E + long(faces.size()) == 1 + components; }
  std::string dump() const;
};

PlanarLoopGraph build_graph(const LoopString& s, double eps);
PlanarLoopGraph build_graph(const Loop& l, double eps);

/** Nonzero-winding cell counts keyed by |n|, via one downward ray per cell column. */
std::map<int, long> winding_histogram(const LoopString& s);

double u1_expectation_discrete(const PlanarLoopGraph& g, const std::vector<double>& a);
double u1_expectation_discrete(const PlanarLoopGraph& g, double eps);
double u1_expectation_continuum(const PlanarLoopGraph& g);

/** Exact U(1) lattice backend: E W_s = prod_n a_|n|(eps)^{cells with winding n}. */
class U1Exact {
 public:
  explicit U1Exact(double eps, int nmax = 64);
  double eps() const { return eps_; }
  double value(const LoopString& s) const;
  double value(const Loop& l) const { return l.trivial() ? 1.0 : value(LoopString{{l}}); }
  double a(int n) const;

 private:
  double eps_;
  mutable std::vector<double> a_;
  mutable std::mutex mu_;
};

double simple_loop_expectation(const GroupSpec& spec, double t, std::optional<double> eps);

enum class DerivBackend { Analytic, FiniteDifference };

/** Continuum U(1) value as a function of face areas. */
double u1_continuum_from_areas(const std::vector<Face>& faces);
double area_derivative(const PlanarLoopGraph& g, int face, DerivBackend backend);

/** Face indices of F1..F4 around the crossing, located by reference cells. */
struct CrossingFaces {
  std::array<int, 4> f{};
};

/** Closed-form I_m on U(1): sign_m * n_m * E W (sign = +,+,-,-). */
double correction_term_Im(const PlanarLoopGraph& g, const CrossingFaces& cf, int m);
/** The same integral by a 4-dimensional trapezoid grid over the face angles. */
double correction_term_Im_quadrature(const PlanarLoopGraph& g, const CrossingFaces& cf, int m, int nodes);

/** Word segments of a built loop, as canonical locations. */
using Segments = std::map<std::string, std::vector<size_t>>;

struct AnnotatedLoop {
  Loop loop;
  Segments seg;
  EdgeAnnotation ann;
  std::array<Point, 4> face_cells{};  // reference cells of F1..F4
  std::vector<double> t_target;       // continuum areas of F1..F4 (0 when unbounded)
  std::vector<long> cells;            // lattice cell counts of F1..F4
  double eps = 0;
  std::map<std::string, int> params;
};

struct AnnotatedString {
  LoopString s;
  std::vector<Segments> seg;  // per component
  std::array<Point, 4> face_cells{};
  std::vector<double> t_target;
  std::vector<long> cells;
  double eps = 0;
  std::map<std::string, int> params;
};

/** Builder of closed lattice paths with named segments. */
class PathBuilder {
 public:
  explicit PathBuilder(Point start) : p_(start) {}
  PathBuilder& go(Dir d, int count = 1);
  PathBuilder& moves(const std::string& m);
  void begin(const std::string& name) { open_ = name; }
  Point at() const { return p_; }
  const Word& word() const { return w_; }
  /** Canonical loop plus segment locations remapped through the canonical rotation. */
  std::pair<Loop, Segments> finish() const;

 private:
  Point p_;
  Word w_;
  std::string open_;
  std::vector<std::string> owner_;
};

AnnotatedLoop rectangle_loop(double t, double eps);
AnnotatedLoop rectangle_cells(int w, int h, double eps);

struct FigureEightParams {
  int C = 1, H1 = 0, H3 = 0, Wl = 0, W2 = 0, H2t = 0, H2b = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0;
};

/** Figure-eight with four bounded faces: two C-shaped lobes crossing at the tiny edge. */
AnnotatedLoop figure_eight_geometry(const FigureEightParams& p, double eps);
AnnotatedLoop figure_eight(const std::array<double, 4>& t, double eps, double c = 0.25);
FigureEightParams fit_figure_eight(const std::array<double, 4>& t, double eps, double c);

/** Two square lobes sharing the tiny edge; lobe windings +1 (left) and -1 (right). */
AnnotatedLoop square_lobes(double t_left, double t_right, double eps);

/** Square lobes joined by a horizontal tiny edge traversed once in each direction. */
AnnotatedLoop opposed_lobes(double t_left, double t_right, double eps);

struct MergerParams {
  int C = 1, H1 = 0, Wl = 0, W2 = 0, H2t = 0, b1 = 0, b2 = 0, b4 = 0;
};
AnnotatedString merger_geometry(const MergerParams& p, double eps);
AnnotatedString merger_pair(double t1, double t2, double t4, double eps, double c = 0.25);

enum class DegenerateKind { ThreeFace, Unbounded };
AnnotatedLoop degenerate_loop(DegenerateKind kind, double eps);

/** Locate F1..F4 of an annotated loop in its graph. */
CrossingFaces crossing_faces(const PlanarLoopGraph& g, const std::array<Point, 4>& cells);

}  // namespace lf
