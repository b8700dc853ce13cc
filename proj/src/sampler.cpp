#include "loopfield/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <omp.h>

namespace lf {

namespace {
constexpr double kPi = 3.14159265358979323846;

struct CompiledLoop {
  std::vector<std::pair<std::uint32_t, bool>> steps;  // (bond index, inverted)
};

struct CompiledString {
  std::vector<CompiledLoop> loops;
};

CompiledString compile(const LatticeBox& box, const LoopString& s) {
  CompiledString out;
  for (const Loop& l : s.loops) {
    CompiledLoop cl;
    for (const Bond& b : l.word()) cl.steps.push_back({std::uint32_t(box.bond_index(b)), !b.positive()});
    out.loops.push_back(std::move(cl));
  }
  return out;
}

double measure(const LatticeConfiguration& c, const CompiledString& s) {
  cplx w = 1.0;
  for (const CompiledLoop& l : s.loops) {
    Mat h = Mat::eye(c.params.spec.N);
    for (auto [i, inv] : l.steps) h = h * (inv ? inverse(c.links[i]) : c.links[i]);
    w *= trace_normalized(h);
  }
  return w.real();
}

}  // namespace

bool LatticeBox::contains(const Bond& b) const {
  Bond p = b.unoriented();
  if (p.dir == R) return p.x >= x0 && p.x < x0 + W && p.y >= y0 && p.y <= y0 + H;
  return p.x >= x0 && p.x <= x0 + W && p.y >= y0 && p.y < y0 + H;
}

size_t LatticeBox::bond_index(const Bond& b) const {
  if (!contains(b)) throw std::out_of_range("loop exits the lattice box");
  Bond p = b.unoriented();
  if (p.dir == R) return size_t(p.y - y0) * W + (p.x - x0);
  return n_horizontal() + size_t(p.y - y0) * (W + 1) + (p.x - x0);
}

Bond LatticeBox::bond_at(size_t i) const {
  if (i < n_horizontal()) return {x0 + int(i % W), y0 + int(i / W), R};
  i -= n_horizontal();
  return {x0 + int(i % (W + 1)), y0 + int(i / (W + 1)), U};
}

size_t LatticeBox::vertex_index(Point p) const { return size_t(p.y - y0) * (W + 1) + (p.x - x0); }
Point LatticeBox::vertex_at(size_t i) const { return {x0 + int(i % (W + 1)), y0 + int(i / (W + 1))}; }

LatticeBox LatticeBox::around(const std::vector<LoopString>& strings, int margin) {
  bool any = false;
  int xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (const auto& s : strings)
    for (const Loop& l : s.loops)
      for (const Bond& b : l.word())
        for (Point p : {b.base(), b.end()}) {
          if (!any) {
            xmin = xmax = p.x;
            ymin = ymax = p.y;
            any = true;
          }
          xmin = std::min(xmin, p.x);
          xmax = std::max(xmax, p.x);
          ymin = std::min(ymin, p.y);
          ymax = std::max(ymax, p.y);
        }
  if (!any) return LatticeBox{};
  return {xmin - margin, ymin - margin, xmax - xmin + 2 * margin, ymax - ymin + 2 * margin};
}

Mat LatticeConfiguration::link(const Bond& b) const {
  const Mat& q = links[box.bond_index(b)];
  return b.positive() ? q : inverse(q);
}

LatticeConfiguration init_config(const LatticeBox& box, const ActionParams& params, bool hot, Rng& rng) {
  LatticeConfiguration c{box, params, {}};
  c.links.reserve(box.n_bonds());
  for (size_t i = 0; i < box.n_bonds(); ++i)
    c.links.push_back(hot ? haar_sample(params.spec, rng) : identity(params.spec));
  return c;
}

Mat plaquette_holonomy(const LatticeConfiguration& c, int x, int y) {
  return c.link({x, y, R}) * c.link({x + 1, y, U}) * c.link({x + 1, y + 1, L}) * c.link({x, y + 1, D});
}

Mat holonomy(const LatticeConfiguration& c, const Loop& l) {
  Mat h = Mat::eye(c.params.spec.N);
  for (const Bond& b : l.word()) h = h * c.link(b);
  return h;
}

cplx wilson_value(const LatticeConfiguration& c, const LoopString& s) {
  cplx w = 1.0;
  for (const Loop& l : s.loops) w *= trace_normalized(holonomy(c, l));
  return w;
}

double total_action(const LatticeConfiguration& c) {
  double s = 0;
  const auto& b = c.box;
  for (int y = b.y0; y < b.y0 + b.H; ++y)
    for (int x = b.x0; x < b.x0 + b.W; ++x) s += double(c.params.spec.N) - plaquette_holonomy(c, x, y).trace().real();
  return c.params.kappa() * s;
}

Mat staple_sum(const LatticeConfiguration& c, size_t i) {
  const LatticeBox& bx = c.box;
  Bond e = bx.bond_at(i);
  Mat r(c.params.spec.N);
  const int x = e.x, y = e.y;
  if (e.dir == R) {
    if (y < bx.y0 + bx.H) r += c.link({x + 1, y, U}) * c.link({x + 1, y + 1, L}) * c.link({x, y + 1, D});
    if (y > bx.y0) r += c.link({x + 1, y, D}) * c.link({x + 1, y - 1, L}) * c.link({x, y - 1, U});
  } else {
    if (x > bx.x0) r += c.link({x, y + 1, L}) * c.link({x - 1, y + 1, D}) * c.link({x - 1, y, R});
    if (x < bx.x0 + bx.W) r += c.link({x, y + 1, R}) * c.link({x + 1, y + 1, D}) * c.link({x + 1, y, L});
  }
  return r;
}

double local_action_delta(const LatticeConfiguration& c, const Bond& e, const Mat& q_new) {
  size_t i = c.box.bond_index(e);
  Mat qn = e.positive() ? q_new : inverse(q_new);
  Mat diff = qn - c.links[i];
  return -c.params.kappa() * (diff * staple_sum(c, i)).trace().real();
}

void ProposalPool::refresh(const GroupSpec& spec, double new_scale, Rng& rng, int size) {
  scale = new_scale;
  moves.clear();
  for (int k = 0; k < size; ++k) {
    Mat x = exp_map(spec, gaussian_lie_sample(spec, rng, scale));
    moves.push_back(x);
    moves.push_back(inverse(x));
  }
}

bool metropolis_update(LatticeConfiguration& c, size_t i, const ProposalPool& pool, Rng& rng) {
  std::uniform_int_distribution<size_t> pick(0, pool.moves.size() - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Mat& x = pool.moves[pick(rng)];
  Mat qn = x * c.links[i];
  double d = -c.params.kappa() * ((qn - c.links[i]) * staple_sum(c, i)).trace().real();
  if (d <= 0 || u01(rng) < std::exp(-d)) {
    c.links[i] = qn;
    return true;
  }
  return false;
}

double sweep_metropolis(LatticeConfiguration& c, const ProposalPool& pool, Rng& rng) {
  long acc = 0;
  for (size_t i = 0; i < c.links.size(); ++i) acc += metropolis_update(c, i, pool, rng);
  return double(acc) / double(c.links.size());
}

double sample_von_mises(double kappa, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (kappa < 1e-8) return -kPi + 2 * kPi * u01(rng);
  const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
  const double r = (1.0 + rho * rho) / (2.0 * rho);
  for (;;) {
    double z = std::cos(kPi * u01(rng));
    double f = (1.0 + r * z) / (r + z);
    double cc = kappa * (r - f);
    double u2 = u01(rng);
    if (cc * (2.0 - cc) - u2 > 0 || std::log(cc / u2) + 1.0 - cc >= 0) {
      double th = std::acos(std::clamp(f, -1.0, 1.0));
      return u01(rng) < 0.5 ? -th : th;
    }
  }
}

void sweep_heatbath_u1(LatticeConfiguration& c, Rng& rng) {
  if (c.params.spec.family != Family::U || c.params.spec.N != 1) throw std::invalid_argument("heat bath is U(1) only");
  const double kap = c.params.kappa();
  for (size_t i = 0; i < c.links.size(); ++i) {
    cplx r = staple_sum(c, i)(0, 0);
    // density of theta ~ exp(kappa |r| cos(theta + arg r))
    double phi = sample_von_mises(kap * std::abs(r), rng);
    c.links[i](0, 0) = std::polar(1.0, phi - std::arg(r));
  }
}

LatticeConfiguration gauge_transform(const LatticeConfiguration& c, const std::vector<Mat>& g) {
  if (g.size() != c.box.n_vertices()) throw std::invalid_argument("gauge map must cover every vertex");
  LatticeConfiguration out = c;
  for (size_t i = 0; i < c.links.size(); ++i) {
    Bond b = c.box.bond_at(i);
    out.links[i] = g[c.box.vertex_index(b.base())] * c.links[i] * inverse(g[c.box.vertex_index(b.end())]);
  }
  return out;
}

void SeriesAccumulator::push(double v, long block) {
  sum += v;
  sumsq += v * v;
  ++n;
  block_sum += v;
  if (++in_block == block) {
    block_means.push_back(block_sum / double(block));
    block_sum = 0;
    in_block = 0;
  }
}

Estimate merge_series(const std::vector<const SeriesAccumulator*>& parts) {
  Estimate e;
  std::vector<double> blocks;
  double sum = 0, sumsq = 0;
  long n = 0;
  for (const auto* p : parts) {
    blocks.insert(blocks.end(), p->block_means.begin(), p->block_means.end());
    sum += p->sum;
    sumsq += p->sumsq;
    n += p->n;
  }
  e.n_samples = n;
  if (n == 0) return e;
  const double mean = sum / double(n);
  const double var = std::max(0.0, sumsq / double(n) - mean * mean);
  e.sigma_naive = n > 1 ? std::sqrt(var / double(n - 1)) : 0.0;
  if (blocks.size() >= 2) {
    double bm = 0;
    for (double b : blocks) bm += b;
    bm /= double(blocks.size());
    double bv = 0;
    for (double b : blocks) bv += (b - bm) * (b - bm);
    bv /= double(blocks.size() - 1);
    e.mean = bm;
    e.sigma = std::sqrt(bv / double(blocks.size()));
  } else {
    e.mean = mean;
    e.sigma = e.sigma_naive;
  }
  if (e.sigma_naive > 0) e.tau = 0.5 * (e.sigma / e.sigma_naive) * (e.sigma / e.sigma_naive);
  return e;
}

ChainResult run_chain(const LatticeBox& box, const ActionParams& params, const Observables& obs,
                      const Schedule& sched, int chain_index) {
  Rng rng(split_seed(sched.seed, std::uint64_t(chain_index)));
  LatticeConfiguration c = init_config(box, params, sched.hot, rng);
  std::vector<CompiledString> compiled;
  for (const auto& s : obs.strings) compiled.push_back(compile(box, s));
  const bool hb = sched.heatbath && params.spec.family == Family::U && params.spec.N == 1;

  ProposalPool pool;
  pool.refresh(params.spec, 0.5, rng);
  double acc_window = 0;
  int window = 0;
  for (long s = 0; s < sched.burn_in; ++s) {
    if (hb) {
      sweep_heatbath_u1(c, rng);
      continue;
    }
    acc_window += sweep_metropolis(c, pool, rng);
    if (++window == 20) {
      double rate = acc_window / window;
      double ns = std::clamp(pool.scale * std::exp(2.0 * (rate - 0.5)), 1e-3, 20.0);
      pool.refresh(params.spec, ns, rng);
      acc_window = 0;
      window = 0;
    }
  }

  ChainResult out;
  out.series.resize(obs.strings.size() + obs.combos.size());
  std::vector<double> vals(obs.strings.size());
  double acc = 0;
  for (long s = 0; s < sched.sweeps; ++s) {
    if (hb)
      sweep_heatbath_u1(c, rng);
    else
      acc += sweep_metropolis(c, pool, rng);
    if ((s + 1) % 1000 == 0)
      for (auto& q : c.links) q = reproject(params.spec, q);
    if ((s + 1) % sched.thin != 0) continue;
    if (sched.transform) {
      LatticeConfiguration t = sched.transform(c);
      for (size_t k = 0; k < compiled.size(); ++k) vals[k] = measure(t, compiled[k]);
    } else {
      for (size_t k = 0; k < compiled.size(); ++k) vals[k] = measure(c, compiled[k]);
    }
    for (size_t k = 0; k < vals.size(); ++k) out.series[k].push(vals[k], sched.block);
    for (size_t j = 0; j < obs.combos.size(); ++j) {
      double v = 0;
      for (auto [k, w] : obs.combos[j]) v += w * vals[k];
      out.series[vals.size() + j].push(v, sched.block);
    }
  }
  out.acceptance = hb ? 1.0 : (sched.sweeps > 0 ? acc / double(sched.sweeps) : 0.0);
  out.final_scale = pool.scale;
  return out;
}

int worker_threads() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("LOOPFIELD_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return std::max(1, n);
}

McResult run_chains(const LatticeBox& box, const ActionParams& params, const Observables& obs,
                    const Schedule& sched, bool parallel) {
  std::vector<ChainResult> res(sched.chains);
  if (parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(worker_threads())
    for (int k = 0; k < sched.chains; ++k) res[k] = run_chain(box, params, obs, sched, k);
  } else {
    for (int k = 0; k < sched.chains; ++k) res[k] = run_chain(box, params, obs, sched, k);
  }
  McResult out;
  const size_t ns = obs.strings.size();
  for (size_t j = 0; j < ns + obs.combos.size(); ++j) {
    std::vector<const SeriesAccumulator*> parts;
    for (const auto& r : res) parts.push_back(&r.series[j]);
    (j < ns ? out.strings : out.combos).push_back(merge_series(parts));
  }
  for (const auto& r : res) out.acceptance += r.acceptance / double(res.size());
  return out;
}

namespace {

double plaquette_angle(const LatticeConfiguration& c) { return std::arg(plaquette_holonomy(c, 0, 0)(0, 0)); }

int angle_bin(double th, int bins) {
  int b = int(std::floor((th + kPi) / (2 * kPi) * bins));
  return std::clamp(b, 0, bins - 1);
}

double chi2_pvalue(double stat, int dof) {
  if (dof <= 0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

ProposalPool tuned_pool(LatticeConfiguration& c, Rng& rng) {
  ProposalPool pool;
  pool.refresh(c.params.spec, 0.5, rng);
  for (int round = 0; round < 50; ++round) {
    double acc = 0;
    for (int s = 0; s < 20; ++s) acc += sweep_metropolis(c, pool, rng);
    double ns = std::clamp(pool.scale * std::exp(2.0 * (acc / 20 - 0.5)), 1e-3, 20.0);
    pool.refresh(c.params.spec, ns, rng);
  }
  return pool;
}

}  // namespace

ChiSquareResult plaquette_histogram_test(double eps, int bins, long samples, std::uint64_t seed) {
  ActionParams p{eps, GroupSpec{Family::U, 1}};
  Rng rng(split_seed(seed, 0));
  LatticeConfiguration c = init_config(LatticeBox{0, 0, 1, 1}, p, true, rng);
  ProposalPool pool = tuned_pool(c, rng);
  std::vector<long> count(bins, 0);
  for (long s = 0; s < samples; ++s) {
    for (int k = 0; k < 5; ++k) sweep_metropolis(c, pool, rng);
    count[angle_bin(plaquette_angle(c), bins)]++;
  }
  // expected bin masses of exp(kappa cos theta) by composite Simpson
  const double kap = p.kappa();
  std::vector<double> mass(bins);
  double total = 0;
  for (int b = 0; b < bins; ++b) {
    const int m = 512;
    double lo = -kPi + 2 * kPi * b / bins, h = 2 * kPi / bins / m, s = 0;
    for (int j = 0; j <= m; ++j) {
      double w = (j == 0 || j == m) ? 1 : (j % 2 ? 4 : 2);
      s += w * std::exp(kap * (std::cos(lo + j * h) - 1.0));
    }
    mass[b] = s * h / 3;
    total += mass[b];
  }
  ChiSquareResult r;
  for (int b = 0; b < bins; ++b) {
    double e = double(samples) * mass[b] / total;
    r.statistic += (count[b] - e) * (count[b] - e) / e;
  }
  r.dof = bins - 1;
  r.p_value = chi2_pvalue(r.statistic, r.dof);
  return r;
}

ChiSquareResult detailed_balance_test(double eps, int bins, long updates, std::uint64_t seed) {
  ActionParams p{eps, GroupSpec{Family::U, 1}};
  Rng rng(split_seed(seed, 0));
  LatticeConfiguration c = init_config(LatticeBox{0, 0, 1, 1}, p, true, rng);
  ProposalPool pool = tuned_pool(c, rng);
  std::vector<long> n(size_t(bins) * bins, 0);
  std::uniform_int_distribution<size_t> pick(0, c.links.size() - 1);
  for (long u = 0; u < updates; ++u) {
    int from = angle_bin(plaquette_angle(c), bins);
    metropolis_update(c, pick(rng), pool, rng);
    int to = angle_bin(plaquette_angle(c), bins);
    n[size_t(from) * bins + to]++;
  }
  ChiSquareResult r;
  for (int i = 0; i < bins; ++i)
    for (int j = i + 1; j < bins; ++j) {
      double a = double(n[size_t(i) * bins + j]), b = double(n[size_t(j) * bins + i]);
      if (a + b == 0) continue;
      r.statistic += (a - b) * (a - b) / (a + b);
      r.dof++;
    }
  r.p_value = chi2_pvalue(r.statistic, r.dof);
  return r;
}

double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double s = 0;
  for (int k = 1; k <= 200; ++k) {
    double t = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 2.0 : -2.0) * t;
    if (t < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

std::pair<double, double> ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = double(u.size());
  double d = 0;
  for (size_t i = 0; i < u.size(); ++i) d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

}  // namespace lf
