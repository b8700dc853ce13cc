#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "loopfield/action.hpp"
#include "loopfield/loop.hpp"

namespace lf {

/** Vertices [x0, x0+W] x [y0, y0+H]; horizontal bonds first, then vertical, row-major. */
struct LatticeBox {
  int x0 = 0, y0 = 0, W = 1, H = 1;

  size_t n_horizontal() const { return size_t(W) * (H + 1); }
  size_t n_vertical() const { return size_t(W + 1) * H; }
  size_t n_bonds() const { return n_horizontal() + n_vertical(); }
  size_t n_plaquettes() const { return size_t(W) * H; }
  size_t n_vertices() const { return size_t(W + 1) * (H + 1); }

  bool contains(const Bond& b) const;
  /** Index of the positively oriented representative of b; throws when b leaves the box. */
  size_t bond_index(const Bond& b) const;
  Bond bond_at(size_t i) const;
  size_t vertex_index(Point p) const;
  Point vertex_at(size_t i) const;

  /** Bounding box of every bond of the strings, widened by margin cells. */
  static LatticeBox around(const std::vector<LoopString>& strings, int margin);
};

struct LatticeConfiguration {
  LatticeBox box;
  ActionParams params;
  std::vector<Mat> links;

  /** Q_b, with Q_{b^-1} = Q_b^-1. */
  Mat link(const Bond& b) const;
};

LatticeConfiguration init_config(const LatticeBox& box, const ActionParams& params, bool hot, Rng& rng);

Mat plaquette_holonomy(const LatticeConfiguration& c, int x, int y);
Mat holonomy(const LatticeConfiguration& c, const Loop& l);
/** prod_i tr(hol(l_i)); the trivial string gives exactly 1. */
cplx wilson_value(const LatticeConfiguration& c, const LoopString& s);
/** kappa sum_p Re Tr(I - Q_p). */
double total_action(const LatticeConfiguration& c);

/** Sum over plaquettes containing bond i of R_p with Re Tr(Q_p) = Re Tr(Q_i R_p). */
Mat staple_sum(const LatticeConfiguration& c, size_t i);
double local_action_delta(const LatticeConfiguration& c, const Bond& e, const Mat& q_new);

/** Symmetric proposal set {X_k, X_k^-1} with X_k = exp(delta A_k). */
struct ProposalPool {
  double scale = 0.5;
  std::vector<Mat> moves;
  void refresh(const GroupSpec& spec, double new_scale, Rng& rng, int size = 64);
};

double sweep_metropolis(LatticeConfiguration& c, const ProposalPool& pool, Rng& rng);
void sweep_heatbath_u1(LatticeConfiguration& c, Rng& rng);
/** One Metropolis update of bond i; returns whether it was accepted. */
bool metropolis_update(LatticeConfiguration& c, size_t i, const ProposalPool& pool, Rng& rng);

/** Q_e -> g_{u(e)} Q_e g_{v(e)}^-1, g indexed by vertex_index. */
LatticeConfiguration gauge_transform(const LatticeConfiguration& c, const std::vector<Mat>& g);

struct Estimate {
  double mean = 0;
  double sigma = 0;        // blocked
  double sigma_naive = 0;
  long n_samples = 0;
  double tau = 0.5;        // integrated autocorrelation estimate, in measurements
};

struct Schedule {
  long sweeps = 10000;   // measured sweeps per chain, after burn-in
  long burn_in = 1000;
  long thin = 1;
  long block = 100;      // measurements per block
  int chains = 4;
  std::uint64_t seed = 1;
  bool hot = false;
  bool heatbath = false;  // U(1) only
  /** Optional map applied to the configuration before each measurement. */
  std::function<LatticeConfiguration(const LatticeConfiguration&)> transform;
};

/** Strings to estimate plus linear combinations of them measured per sample. */
struct Observables {
  std::vector<LoopString> strings;
  std::vector<std::vector<std::pair<size_t, double>>> combos;
};

struct SeriesAccumulator {
  std::vector<double> block_means;
  double sum = 0, sumsq = 0, block_sum = 0;
  long n = 0, in_block = 0;
  void push(double v, long block);
};

struct ChainResult {
  std::vector<SeriesAccumulator> series;  // strings, then combos
  double acceptance = 0;
  double final_scale = 0;
};

struct McResult {
  std::vector<Estimate> strings, combos;
  double acceptance = 0;
};

ChainResult run_chain(const LatticeBox& box, const ActionParams& params, const Observables& obs,
                      const Schedule& sched, int chain_index);
/** Independent chains seeded by split_seed(seed, chain); merged in chain order. */
McResult run_chains(const LatticeBox& box, const ActionParams& params, const Observables& obs,
                    const Schedule& sched, bool parallel);
Estimate merge_series(const std::vector<const SeriesAccumulator*>& parts);

/** Worker cap from LOOPFIELD_THREADS, else the OpenMP default. */
int worker_threads();

double sample_von_mises(double kappa, Rng& rng);

struct ChiSquareResult {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
};

/** Plaquette-angle histogram of a 1-plaquette U(1) box against the Wilson density. */
ChiSquareResult plaquette_histogram_test(double eps, int bins, long samples, std::uint64_t seed);
/** Transition-count asymmetry between plaquette-angle bins under single-link Metropolis updates. */
ChiSquareResult detailed_balance_test(double eps, int bins, long updates, std::uint64_t seed);

/** Kolmogorov-Smirnov test of samples in [0,1) against uniform; returns (D, p). */
std::pair<double, double> ks_uniform(std::vector<double> u);
double kolmogorov_q(double lambda);

}  // namespace lf
