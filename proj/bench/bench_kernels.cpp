#include <benchmark/benchmark.h>

#include "loopfield/driver.hpp"
#include "loopfield/mm.hpp"
#include "loopfield/sampler.hpp"

namespace {

struct Setup {
  lf::LatticeBox box;
  lf::Observables obs;
  lf::Schedule sched;
};

Setup make_setup(long sweeps) {
  Setup s;
  lf::AnnotatedLoop f = lf::figure_eight_geometry(lf::mc_figure_eight_params(), 0.5);
  s.obs.strings = {lf::LoopString{{f.loop}}, lf::LoopString{{lf::plaquette(0, 0)}}};
  s.box = lf::LatticeBox::around(s.obs.strings, 2);
  s.sched.sweeps = sweeps;
  s.sched.burn_in = 50;
  s.sched.block = 50;
  s.sched.chains = 4;
  s.sched.seed = 17;
  return s;
}

void run(benchmark::State& state, bool parallel) {
  const lf::GroupSpec g{lf::Family::SU, 2};
  Setup s = make_setup(state.range(0));
  for (auto _ : state) {
    auto res = lf::run_chains(s.box, {0.5, g}, s.obs, s.sched, parallel);
    benchmark::DoNotOptimize(res.strings[0].mean);
  }
  state.counters["sweeps"] = benchmark::Counter(double(s.sched.chains * (s.sched.sweeps + s.sched.burn_in)),
                                                benchmark::Counter::kIsIterationInvariantRate);
}

void BM_ChainsSerial(benchmark::State& state) { run(state, false); }
void BM_ChainsOpenMP(benchmark::State& state) { run(state, true); }

void BM_VerifyDiscrete(benchmark::State& state) {
  lf::DiscreteOptions o;
  o.random_loops = 10;
  o.random_strings = 4;
  for (auto _ : state) benchmark::DoNotOptimize(lf::verify_discrete(o).clauses.size());
}

}  // namespace

BENCHMARK(BM_ChainsSerial)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChainsOpenMP)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VerifyDiscrete)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
