#include "loopfield/driver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include <json.hpp>

namespace lf {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string bond_str(const Bond& b) {
  return "(" + std::to_string(b.x) + "," + std::to_string(b.y) + ")" + dir_char(b.dir);
}

/** Horizontal bonds per column as (y, +-1), R counting +1; winding of cell (x, j) = sum over y <= j. */
std::map<int, std::vector<std::pair<int, int>>> column_crossings(const LoopString& s) {
  std::map<int, std::vector<std::pair<int, int>>> cols;
  for (const Loop& l : s.loops)
    for (const Bond& b : l.word()) {
      if (b.dir == R) cols[b.x].push_back({b.y, +1});
      if (b.dir == L) cols[b.x - 1].push_back({b.y, -1});
    }
  for (auto& [x, v] : cols) std::sort(v.begin(), v.end());
  return cols;
}

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

}  // namespace

int PlanarLoopGraph::face_of_cell(Point cell) const {
  auto it = cell_face.find(cell);
  return it == cell_face.end() ? 0 : it->second;
}

std::string PlanarLoopGraph::dump() const {
  nlohmann::ordered_json j;
  j["eps"] = eps;
  j["V"] = V;
  j["E"] = E;
  std::vector<int> idx;
  std::vector<double> areas;
  std::vector<int> windings;
  std::vector<bool> bounded;
  std::vector<std::vector<std::string>> boundaries;
  for (size_t i = 0; i < faces.size(); ++i) {
    idx.push_back(int(i));
    areas.push_back(faces[i].area);
    windings.push_back(faces[i].winding);
    bounded.push_back(faces[i].bounded);
    std::vector<std::string> bs;
    for (const Bond& b : faces[i].boundary) bs.push_back(bond_str(b));
    boundaries.push_back(bs);
  }
  j["faces"] = idx;
  j["areas"] = areas;
  j["windings"] = windings;
  j["bounded"] = bounded;
  j["boundaries"] = boundaries;
  return j.dump(1);
}

PlanarLoopGraph build_graph(const Loop& l, double eps) { return build_graph(LoopString{{l}}, eps); }

PlanarLoopGraph build_graph(const LoopString& s, double eps) {
  std::set<Bond> used;
  std::set<Point> verts;
  for (const Loop& l : s.loops)
    for (const Bond& b : l.word()) {
      used.insert(b.unoriented());
      verts.insert(b.base());
      verts.insert(b.end());
    }
  if (used.empty()) throw LoopError("degenerate empty loop");

  int xmin = verts.begin()->x, xmax = xmin, ymin = verts.begin()->y, ymax = ymin;
  for (const Point& p : verts) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  // cells with lower-left corner in [xmin-1, xmax] x [ymin-1, ymax]
  const int cx0 = xmin - 1, cy0 = ymin - 1, W = xmax - xmin + 2, H = ymax - ymin + 2;
  auto cid = [&](int x, int y) { return (y - cy0) * W + (x - cx0); };

  std::vector<int> wind(size_t(W) * H, 0);
  for (const auto& [x, v] : column_crossings(s)) {
    int acc = 0;
    for (size_t k = 0; k < v.size(); ++k) {
      acc += v[k].second;
      int top = k + 1 < v.size() ? v[k + 1].first : cy0 + H;
      for (int y = v[k].first; y < top; ++y) wind[cid(x, y)] = acc;
    }
  }

  std::vector<int> comp(size_t(W) * H, -1);
  std::vector<Point> first_cell;
  auto blocked_h = [&](int x, int y) { return used.count(Bond{x, y, U}) > 0; };  // between (x-1,y) and (x,y)
  auto blocked_v = [&](int x, int y) { return used.count(Bond{x, y, R}) > 0; };  // between (x,y-1) and (x,y)
  int nf = 0;
  for (int y = cy0; y < cy0 + H; ++y)
    for (int x = cx0; x < cx0 + W; ++x) {
      if (comp[cid(x, y)] >= 0) continue;
      std::deque<Point> q{{x, y}};
      comp[cid(x, y)] = nf;
      first_cell.push_back({x, y});
      while (!q.empty()) {
        Point c = q.front();
        q.pop_front();
        auto visit = [&](int nx, int ny, bool wall) {
          if (wall || nx < cx0 || ny < cy0 || nx >= cx0 + W || ny >= cy0 + H) return;
          if (comp[cid(nx, ny)] >= 0) return;
          comp[cid(nx, ny)] = nf;
          q.push_back({nx, ny});
        };
        visit(c.x + 1, c.y, blocked_h(c.x + 1, c.y));
        visit(c.x - 1, c.y, blocked_h(c.x, c.y));
        visit(c.x, c.y + 1, blocked_v(c.x, c.y + 1));
        visit(c.x, c.y - 1, blocked_v(c.x, c.y));
      }
      ++nf;
    }

  PlanarLoopGraph g;
  g.eps = eps;
  g.faces.resize(nf);
  for (int f = 0; f < nf; ++f) {
    g.faces[f].ref = first_cell[f];
    g.faces[f].winding = wind[cid(first_cell[f].x, first_cell[f].y)];
  }
  g.faces[0].bounded = false;
  if (g.faces[0].winding != 0) throw LoopError("unbounded face has nonzero winding");
  for (int y = cy0; y < cy0 + H; ++y)
    for (int x = cx0; x < cx0 + W; ++x) {
      int f = comp[cid(x, y)];
      if (wind[cid(x, y)] != g.faces[f].winding) throw LoopError("winding not constant on a face");
      if (f == 0) continue;
      g.faces[f].cells++;
      g.cell_face[{x, y}] = f;
    }
  for (auto& f : g.faces) f.area = eps * eps * double(f.cells);

  for (const Bond& b : used) {
    Point a, c;
    if (b.dir == R) {
      a = {b.x, b.y - 1};
      c = {b.x, b.y};
    } else {
      a = {b.x - 1, b.y};
      c = {b.x, b.y};
    }
    int fa = comp[cid(a.x, a.y)], fc = comp[cid(c.x, c.y)];
    g.faces[fa].boundary.push_back(b);
    if (fc != fa) g.faces[fc].boundary.push_back(b);
  }

  std::map<Point, int> vid;
  for (const Point& p : verts) vid.emplace(p, int(vid.size()));
  UnionFind uf(verts.size());
  for (const Bond& b : used) uf.unite(vid[b.base()], vid[b.end()]);
  std::set<int> roots;
  for (size_t i = 0; i < verts.size(); ++i) roots.insert(uf.find(int(i)));
  g.V = long(verts.size());
  g.E = long(used.size());
  g.components = int(roots.size());
  if (!g.euler_ok()) throw LoopError("Euler relation violated");
  return g;
}

std::map<int, long> winding_histogram(const LoopString& s) {
  std::map<int, long> h;
  for (const auto& [x, v] : column_crossings(s)) {
    int acc = 0;
    for (size_t k = 0; k + 1 < v.size(); ++k) {
      acc += v[k].second;
      if (acc != 0 && v[k + 1].first > v[k].first) h[std::abs(acc)] += v[k + 1].first - v[k].first;
    }
  }
  return h;
}

double u1_expectation_discrete(const PlanarLoopGraph& g, const std::vector<double>& a) {
  std::map<int, long> h;
  for (const Face& f : g.faces)
    if (f.bounded && f.winding != 0) h[std::abs(f.winding)] += f.cells;
  double v = 1.0;
  for (const auto& [n, c] : h) {
    if (n >= int(a.size())) throw std::out_of_range("winding exceeds coefficient table");
    v *= std::pow(a[n], double(c));
  }
  return v;
}

double u1_expectation_discrete(const PlanarLoopGraph& g, double eps) {
  int nmax = 1;
  for (const Face& f : g.faces) nmax = std::max(nmax, std::abs(f.winding));
  return u1_expectation_discrete(g, u1_coefficients(eps, std::max(nmax, 8)));
}

double u1_continuum_from_areas(const std::vector<Face>& faces) {
  double s = 0;
  for (const Face& f : faces)
    if (f.bounded) s += double(f.winding) * f.winding * f.area;
  return std::exp(-0.5 * s);
}

double u1_expectation_continuum(const PlanarLoopGraph& g) { return u1_continuum_from_areas(g.faces); }

U1Exact::U1Exact(double eps, int nmax) : eps_(eps), a_(u1_coefficients(eps, nmax)) {}

double U1Exact::a(int n) const {
  n = std::abs(n);
  std::lock_guard<std::mutex> lk(mu_);
  if (n >= int(a_.size())) a_ = u1_coefficients(eps_, 2 * n);
  return a_[n];
}

double U1Exact::value(const LoopString& s) const {
  double v = 1.0;
  for (const auto& [n, c] : winding_histogram(s)) v *= std::pow(a(n), double(c));
  return v;
}

double simple_loop_expectation(const GroupSpec& spec, double t, std::optional<double> eps) {
  if (t <= 0) throw std::invalid_argument("t must be positive");
  if (!eps) return std::exp(casimir_standard(spec) * t / 2.0);
  double k = t / (*eps * *eps);
  if (std::abs(k - std::round(k)) > 1e-9) throw std::invalid_argument("t / eps^2 must be an integer");
  return std::pow(char_coefficient("std", ActionParams{*eps, spec}), std::round(k));
}

double area_derivative(const PlanarLoopGraph& g, int face, DerivBackend backend) {
  if (face < 0 || face >= int(g.faces.size())) throw std::out_of_range("face index");
  const Face& f = g.faces[face];
  if (!f.bounded) throw std::invalid_argument("face is unbounded");
  if (backend == DerivBackend::Analytic) return -0.5 * f.winding * f.winding * u1_continuum_from_areas(g.faces);
  double h = 1e-4 * f.area;
  auto faces = g.faces;
  faces[face].area = f.area + h;
  double up = u1_continuum_from_areas(faces);
  faces[face].area = f.area - h;
  double dn = u1_continuum_from_areas(faces);
  return (up - dn) / (2 * h);
}

double correction_term_Im(const PlanarLoopGraph& g, const CrossingFaces& cf, int m) {
  if (m < 1 || m > 4) throw std::out_of_range("m");
  static const int sign[4] = {1, 1, -1, -1};
  return sign[m - 1] * g.faces[cf.f[m - 1]].winding * u1_expectation_continuum(g);
}

double correction_term_Im_quadrature(const PlanarLoopGraph& g, const CrossingFaces& cf, int m, int nodes) {
  if (m < 1 || m > 4) throw std::out_of_range("m");
  static const int sign[4] = {1, 1, -1, -1};
  double rest = 1.0;
  for (size_t i = 0; i < g.faces.size(); ++i) {
    if (std::find(cf.f.begin(), cf.f.end(), int(i)) != cf.f.end() || !g.faces[i].bounded) continue;
    rest *= std::exp(-0.5 * g.faces[i].winding * g.faces[i].winding * g.faces[i].area);
  }
  // tables of e^{i n theta} p(theta) (or p' for face m) per dimension
  std::array<std::vector<cplx>, 4> tab;
  for (int k = 0; k < 4; ++k) {
    const Face& f = g.faces[cf.f[k]];
    tab[k].resize(nodes);
    for (int j = 0; j < nodes; ++j) {
      double th = 2 * kPi * j / nodes;
      double p;
      if (k == m - 1) {
        p = 0;
        for (int n = 1; n <= 60; ++n) p -= 2.0 * n * std::exp(-0.5 * n * n * f.area) * std::sin(n * th);
      } else {
        p = f.bounded ? u1_heat_kernel(th, f.area) : 1.0;
      }
      tab[k][j] = std::polar(1.0, f.winding * th) * p;
    }
  }
  cplx acc = 0;
  for (int a = 0; a < nodes; ++a)
    for (int b = 0; b < nodes; ++b) {
      cplx ab = tab[0][a] * tab[1][b];
      for (int c = 0; c < nodes; ++c) {
        cplx abc = ab * tab[2][c];
        for (int d = 0; d < nodes; ++d) acc += abc * tab[3][d];
      }
    }
  double n4 = double(nodes) * nodes * nodes * nodes;
  return sign[m - 1] * (cplx(0, 1) * acc / n4).real() * rest;
}

PathBuilder& PathBuilder::go(Dir d, int count) {
  if (count < 0) throw std::invalid_argument("negative run length");
  for (int i = 0; i < count; ++i) {
    Bond b{p_.x, p_.y, d};
    w_.push_back(b);
    owner_.push_back(open_);
    p_ = b.end();
  }
  return *this;
}

PathBuilder& PathBuilder::moves(const std::string& m) {
  for (char c : m) go(dir_from_char(c));
  return *this;
}

std::pair<Loop, Segments> PathBuilder::finish() const {
  if (!is_closed_adjacent(w_)) throw LoopError("path does not close");
  Loop check = make_loop(w_);
  if (check.size() != w_.size()) throw LoopError("path backtracks");
  size_t r = 0;
  Loop l = canonical_from_clean(w_, &r);
  Segments seg;
  const size_t n = w_.size();
  for (size_t i = 0; i < n; ++i)
    if (!owner_[i].empty()) seg[owner_[i]].push_back((i + n - r) % n);
  return {l, seg};
}

namespace {

void verify_cells(const PlanarLoopGraph& g, const std::array<Point, 4>& cells, const std::vector<long>& want,
                  const std::vector<bool>& bounded) {
  for (int k = 0; k < 4; ++k) {
    int f = g.face_of_cell(cells[k]);
    bool b = f != 0;
    if (b != bounded[k]) throw LoopError("geometry infeasible: face boundedness mismatch");
    if (b && g.faces[f].cells != want[k]) throw LoopError("geometry infeasible: face size mismatch");
  }
}

}  // namespace

AnnotatedLoop rectangle_cells(int w, int h, double eps) {
  if (w < 1 || h < 1) throw LoopError("geometry infeasible: empty rectangle");
  PathBuilder pb({0, 0});
  pb.go(R, w).go(U, h).go(L, w).go(D, h);
  auto [l, seg] = pb.finish();
  AnnotatedLoop out;
  out.loop = l;
  out.seg = seg;
  out.eps = eps;
  out.face_cells = {Point{0, 0}, Point{0, 0}, Point{0, 0}, Point{0, 0}};
  out.cells = {long(w) * h};
  out.t_target = {eps * eps * w * h};
  out.params = {{"w", w}, {"h", h}};
  return out;
}

AnnotatedLoop rectangle_loop(double t, double eps) {
  long k = plaquette_count(t, eps);
  int w = std::max(1, int(std::lround(std::sqrt(double(k)))));
  while (k % w != 0) --w;
  AnnotatedLoop out = rectangle_cells(w, int(k / w), eps);
  out.t_target = {t};
  return out;
}

FigureEightParams fit_figure_eight(const std::array<double, 4>& t, double eps, double c) {
  FigureEightParams p;
  p.C = std::max(1, int(std::lround(c / eps)));
  const long C = p.C;
  long T[4];
  for (int i = 0; i < 4; ++i) {
    T[i] = plaquette_count(t[i], eps);
    if (T[i] <= 0) throw LoopError("geometry infeasible: non-positive area");
  }
  auto fit_lobe = [&](long target, int& H, int& b) {
    // cells = 2C(H-1) - C(C-1) + b, b in [0, 2C-1]
    long h = (target + C * (C - 1)) / (2 * C) + 1;
    H = int(std::max(C + 2, h));
    b = int(target - (2 * C * (H - 1) - C * (C - 1)));
    if (b < 0 || b > 2 * C - 1) throw LoopError("geometry infeasible: top/bottom lobe");
  };
  fit_lobe(T[0], p.H1, p.b1);
  fit_lobe(T[2], p.H3, p.b3);
  const long h13 = p.H1 + p.H3;
  long wl = (T[1] - C * (C + 1)) / h13 + C;
  p.Wl = int(std::max(C + 1, wl));
  p.b2 = int(T[1] - ((p.Wl - C) * h13 + C * (C + 1)));
  if (p.b2 < 0 || p.b2 > h13 - 1) throw LoopError("geometry infeasible: left face");
  p.H2t = p.H1 + 2;
  p.H2b = p.H3 + 2;
  const long h2 = p.H2t + p.H2b;
  long base0 = -C * (C + 1) - T[0] - T[2];
  long w2 = (T[3] - base0) / h2 - C;
  p.W2 = int(std::max(C + 1, w2));
  p.b4 = int(T[3] - ((p.W2 + C) * h2 + base0));
  if (p.b4 < 0 || p.b4 > h2 - 1) throw LoopError("geometry infeasible: right face");
  return p;
}

AnnotatedLoop figure_eight_geometry(const FigureEightParams& p, double eps) {
  const int C = p.C;
  if (C < 1 || p.H1 < C + 2 || p.H3 < C + 2 || p.Wl < C + 1 || p.W2 < C + 1 || p.H2t < p.H1 + 1 ||
      p.H2b < p.H3 + 1)
    throw LoopError("geometry infeasible: parameters");
  if (p.b1 < 0 || p.b1 > 2 * C - 1 || p.b3 < 0 || p.b3 > 2 * C - 1 || p.b2 < 0 || p.b2 > p.H1 + p.H3 - 1 ||
      p.b4 < 0 || p.b4 > p.H2t + p.H2b - 1)
    throw LoopError("geometry infeasible: bump sizes");
  PathBuilder pb({0, -1});
  pb.begin("e");
  pb.go(U, 2);
  pb.begin("e1");
  for (int i = 0; i < C; ++i) pb.go(R).go(U);
  pb.go(U, p.H1 - C - 1);
  if (p.b1 > 0) pb.go(U).go(L, p.b1).go(D);
  pb.go(L, 2 * C - p.b1);
  pb.begin("A");
  pb.go(L, p.Wl - C);
  if (p.b2 > 0) pb.go(L).go(D, p.b2).go(R);
  pb.go(D, p.H1 + p.H3 - p.b2);
  pb.go(R, p.Wl - C);
  pb.begin("e4inv");
  pb.go(R, 2 * C - p.b3);
  if (p.b3 > 0) pb.go(D).go(R, p.b3).go(U);
  pb.go(U, p.H3 - C - 1);
  for (int i = 0; i < C; ++i) pb.go(U).go(L);
  pb.begin("e_bar");
  pb.go(U, 2);
  pb.begin("e2");
  for (int i = 0; i < C; ++i) pb.go(L).go(U);
  pb.go(U, p.H1 - C - 1);
  pb.begin("B");
  pb.go(U, p.H2t - p.H1);
  pb.go(R, p.W2 + C);
  if (p.b4 > 0) pb.go(R).go(D, p.b4).go(L);
  pb.go(D, p.H2t + p.H2b - p.b4);
  pb.go(L, p.W2 + C);
  pb.go(U, p.H2b - p.H3);
  pb.begin("e3inv");
  pb.go(U, p.H3 - C - 1);
  for (int i = 0; i < C; ++i) pb.go(U).go(R);
  if (pb.at() != Point{0, -1}) throw LoopError("figure-eight path does not close");

  auto [l, seg] = pb.finish();
  AnnotatedLoop out;
  out.loop = l;
  out.seg = seg;
  out.eps = eps;
  out.ann.e = seg["e"];
  out.ann.e_bar = seg["e_bar"];
  out.ann.e1 = seg["e1"];
  out.ann.e2 = seg["e2"];
  out.ann.e3inv = seg["e3inv"];
  out.ann.e4inv = seg["e4inv"];
  out.face_cells = {Point{0, 1}, Point{-1, 0}, Point{0, -2}, Point{0, 0}};
  const long CC = C;
  long f1 = 2 * CC * (p.H1 - 1) - CC * (CC - 1) + p.b1;
  long f3 = 2 * CC * (p.H3 - 1) - CC * (CC - 1) + p.b3;
  long f2 = long(p.Wl - C) * (p.H1 + p.H3) + CC * (CC + 1) + p.b2;
  long f4 = long(p.W2 + C) * (p.H2t + p.H2b) - CC * (CC + 1) - f1 - f3 + p.b4;
  out.cells = {f1, f2, f3, f4};
  for (long c : out.cells) out.t_target.push_back(eps * eps * double(c));
  out.params = {{"C", C},     {"H1", p.H1}, {"H3", p.H3}, {"Wl", p.Wl}, {"W2", p.W2}, {"H2t", p.H2t},
                {"H2b", p.H2b}, {"b1", p.b1}, {"b2", p.b2}, {"b3", p.b3}, {"b4", p.b4}};
  verify_cells(build_graph(l, eps), out.face_cells, out.cells, {true, true, true, true});
  return out;
}

AnnotatedLoop figure_eight(const std::array<double, 4>& t, double eps, double c) {
  AnnotatedLoop out = figure_eight_geometry(fit_figure_eight(t, eps, c), eps);
  out.t_target.assign(t.begin(), t.end());
  return out;
}

AnnotatedLoop square_lobes(double t_left, double t_right, double eps) {
  int sl = int(std::lround(std::sqrt(t_left) / eps)), sr = int(std::lround(std::sqrt(t_right) / eps));
  if (sl < 2 || sr < 2) throw LoopError("geometry infeasible: lobe smaller than the crossing edge");
  PathBuilder pb({0, -1});
  pb.begin("e");
  pb.go(U, 2);
  pb.begin("e1");
  pb.go(U, sr - 2).go(R, sr).go(D, sr / 2);
  pb.begin("e4inv");
  pb.go(D, sr - sr / 2).go(L, sr);
  pb.begin("e_bar");
  pb.go(U, 2);
  pb.begin("e2");
  pb.go(L, sl).go(D, sl / 2);
  pb.begin("e3inv");
  pb.go(D, sl - sl / 2).go(R, sl).go(U, sl - 2);
  auto [l, seg] = pb.finish();
  AnnotatedLoop out;
  out.loop = l;
  out.seg = seg;
  out.eps = eps;
  out.ann = {seg["e"], seg["e_bar"], seg["e1"], seg["e2"], seg["e3inv"], seg["e4inv"]};
  out.face_cells = {Point{-1, 1}, Point{-1, 0}, Point{0, -2}, Point{0, 0}};
  out.cells = {0, long(sl) * sl, 0, long(sr) * sr};
  out.t_target = {0, t_left, 0, t_right};
  out.params = {{"sl", sl}, {"sr", sr}};
  verify_cells(build_graph(l, eps), out.face_cells, out.cells, {false, true, false, true});
  return out;
}

AnnotatedLoop opposed_lobes(double t_left, double t_right, double eps) {
  int sl = int(std::lround(std::sqrt(t_left) / eps)), sr = int(std::lround(std::sqrt(t_right) / eps));
  if (sl < 2 || sr < 2) throw LoopError("geometry infeasible: lobe too small");
  const int ar = sr / 2, al = sl / 2;
  PathBuilder pb({-1, 0});
  pb.begin("e");
  pb.go(R, 2);
  pb.begin("e1");
  pb.go(U, ar).go(R, sr).go(D, sr / 2);
  pb.begin("e4inv");
  pb.go(D, sr - sr / 2).go(L, sr).go(U, sr - ar);
  pb.begin("e_bar");
  pb.go(L, 2);
  pb.begin("e2");
  pb.go(U, al).go(L, sl).go(D, sl / 2);
  pb.begin("e3inv");
  pb.go(D, sl - sl / 2).go(R, sl).go(U, sl - al);
  auto [l, seg] = pb.finish();
  AnnotatedLoop out;
  out.loop = l;
  out.seg = seg;
  out.eps = eps;
  out.ann = {seg["e"], seg["e_bar"], seg["e1"], seg["e2"], seg["e3inv"], seg["e4inv"]};
  out.face_cells = {Point{0, 0}, Point{-2, 0}, Point{0, -1}, Point{1, 0}};
  out.cells = {0, long(sl) * sl, 0, long(sr) * sr};
  out.t_target = {0, t_left, 0, t_right};
  out.params = {{"sl", sl}, {"sr", sr}};
  verify_cells(build_graph(l, eps), out.face_cells, out.cells, {false, true, false, true});
  return out;
}

AnnotatedString merger_geometry(const MergerParams& p, double eps) {
  const int C = p.C;
  if (C < 1 || p.H1 < C + 2 || p.Wl < C + 1 || p.W2 < C + 1 || p.H2t < p.H1 + 1)
    throw LoopError("geometry infeasible: parameters");
  if (p.b1 < 0 || p.b1 > 2 * C - 1 || p.b2 < 0 || p.b2 > p.H1 + C || p.b4 < 0 || p.b4 > p.H2t + C)
    throw LoopError("geometry infeasible: bump sizes");
  if (p.b1 > 0 && p.H2t < p.H1 + 2) throw LoopError("geometry infeasible: bump meets outer loop");
  PathBuilder p1({0, -1});
  p1.begin("e");
  p1.go(U, 2);
  p1.begin("e1");
  for (int i = 0; i < C; ++i) p1.go(R).go(U);
  p1.go(U, p.H1 - C - 1);
  if (p.b1 > 0) p1.go(U).go(L, p.b1).go(D);
  p1.go(L, 2 * C - p.b1);
  p1.begin("e3inv");
  p1.go(L, p.Wl - C);
  if (p.b2 > 0) p1.go(L).go(D, p.b2).go(R);
  p1.go(D, p.H1 + C + 1 - p.b2);
  p1.go(R, p.Wl - C);
  for (int i = 0; i < C; ++i) p1.go(U).go(R);
  if (p1.at() != Point{0, -1}) throw LoopError("merger path l1 does not close");

  PathBuilder p2({0, -1});
  p2.begin("e");
  p2.go(U, 2);
  p2.begin("e2");
  for (int i = 0; i < C; ++i) p2.go(L).go(U);
  p2.go(U, p.H1 - C - 1);
  p2.begin("e4inv");
  p2.go(U, p.H2t - p.H1);
  p2.go(R, p.W2 + C);
  if (p.b4 > 0) p2.go(R).go(D, p.b4).go(L);
  p2.go(D, p.H2t + C + 1 - p.b4);
  p2.go(L, p.W2 - C);
  for (int i = 0; i < C; ++i) p2.go(U).go(L);
  if (p2.at() != Point{0, -1}) throw LoopError("merger path l2 does not close");

  auto [l1, s1] = p1.finish();
  auto [l2, s2] = p2.finish();
  AnnotatedString out;
  out.s = LoopString{{l1, l2}};
  out.seg = {s1, s2};
  out.eps = eps;
  out.face_cells = {Point{0, 1}, Point{-1, 0}, Point{0, -2}, Point{0, 0}};
  const long CC = C;
  long f1 = 2 * CC * (p.H1 - 1) - CC * (CC - 1) + p.b1;
  long f2 = long(p.Wl - C) * (p.H1 + C + 1) + CC * (CC + 1) + p.b2;
  long f4 = long(p.W2 - C) * (p.H2t + C + 1) + CC * (CC + 1) + 2 * CC * (p.H2t - p.H1) - p.b1 + p.b4;
  out.cells = {f1, f2, 0, f4};
  out.t_target = {eps * eps * f1, eps * eps * f2, 0.0, eps * eps * f4};
  out.params = {{"C", C}, {"H1", p.H1}, {"Wl", p.Wl}, {"W2", p.W2}, {"H2t", p.H2t},
                {"b1", p.b1}, {"b2", p.b2}, {"b4", p.b4}};
  verify_cells(build_graph(out.s, eps), out.face_cells, out.cells, {true, true, false, true});
  return out;
}

AnnotatedString merger_pair(double t1, double t2, double t4, double eps, double c) {
  MergerParams p;
  p.C = std::max(1, int(std::lround(c / eps)));
  const long C = p.C;
  long T1 = plaquette_count(t1, eps), T2 = plaquette_count(t2, eps), T4 = plaquette_count(t4, eps);
  long h = (T1 + C * (C - 1)) / (2 * C) + 1;
  p.H1 = int(std::max(C + 2, h));
  p.b1 = int(T1 - (2 * C * (p.H1 - 1) - C * (C - 1)));
  if (p.b1 < 0 || p.b1 > 2 * C - 1) throw LoopError("geometry infeasible: merger top face");
  const long hl = p.H1 + C + 1;
  p.Wl = int(std::max(C + 1, (T2 - C * (C + 1)) / hl + C));
  p.b2 = int(T2 - ((p.Wl - C) * hl + C * (C + 1)));
  if (p.b2 < 0 || p.b2 > hl - 1) throw LoopError("geometry infeasible: merger left face");
  p.H2t = p.H1 + 2;
  const long hr = p.H2t + C + 1;
  long base0 = C * (C + 1) + 2 * C * (p.H2t - p.H1) - p.b1;
  p.W2 = int(std::max(C + 1, (T4 - base0) / hr + C));
  p.b4 = int(T4 - ((p.W2 - C) * hr + base0));
  if (p.b4 < 0 || p.b4 > hr - 1) throw LoopError("geometry infeasible: merger right face");
  AnnotatedString out = merger_geometry(p, eps);
  out.t_target = {t1, t2, 0.0, t4};
  return out;
}

AnnotatedLoop degenerate_loop(DegenerateKind kind, double eps) {
  PathBuilder pb({0, -1});
  std::vector<bool> bounded;
  if (kind == DegenerateKind::ThreeFace) {
    const int a = 3, Lx = 4, Hh = 4, Rr = 5;
    pb.begin("e");
    pb.go(U, 2);
    pb.begin("l1");
    pb.go(R, a).go(D, 2).go(L, a);
    pb.begin("e_bar");
    pb.go(U, 2);
    pb.begin("l2");
    pb.go(L, Lx - 1).go(D).go(L, 2).go(D, Hh).go(R, Rr + Lx + 1).go(U, 2 * Hh).go(L, Rr + Lx).go(D, Hh + 1);
    pb.go(R, Lx);
    bounded = {true, true, true, true};
  } else {
    const int a = 2, h = 3, Wd = 5, b = 3;
    pb.begin("e");
    pb.go(U, 2);
    pb.begin("l1");
    pb.go(R, a).go(U, h).go(L, a + Wd).go(D, 2 * h + 2).go(R, Wd + a).go(U, h).go(L, a);
    pb.begin("e_bar");
    pb.go(U, 2);
    pb.begin("l2");
    pb.go(L, b).go(D, 2).go(R, b);
    bounded = {true, true, true, false};
  }
  if (pb.at() != Point{0, -1}) throw LoopError("degenerate path does not close");
  auto [l, seg] = pb.finish();
  AnnotatedLoop out;
  out.loop = l;
  out.seg = seg;
  out.eps = eps;
  out.ann.e = seg["e"];
  out.ann.e_bar = seg["e_bar"];
  out.face_cells = {Point{0, 1}, Point{-1, 0}, Point{0, -2}, Point{0, 0}};
  PlanarLoopGraph g = build_graph(l, eps);
  for (int k = 0; k < 4; ++k) {
    int f = g.face_of_cell(out.face_cells[k]);
    if ((f != 0) != bounded[k]) throw LoopError("degenerate geometry: boundedness mismatch");
    out.cells.push_back(g.faces[f].cells);
    out.t_target.push_back(g.faces[f].area);
  }
  return out;
}

CrossingFaces crossing_faces(const PlanarLoopGraph& g, const std::array<Point, 4>& cells) {
  CrossingFaces cf;
  for (int k = 0; k < 4; ++k) cf.f[k] = g.face_of_cell(cells[k]);
  return cf;
}

}  // namespace lf
