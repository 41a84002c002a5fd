#include <benchmark/benchmark.h>

#include "bell/analysis.hpp"
#include "bell/apparatus.hpp"
#include "bell/lhvopt.hpp"

using namespace bell;

namespace {

apparatus::StationConfig station(Station st) {
  const AngleSet s = chsh_optimal_settings();
  return st == Station::Alice ? apparatus::ideal_station(st, s.alice_primary, s.alice_alternate)
                              : apparatus::ideal_station(st, s.bob_primary, s.bob_alternate);
}

apparatus::ExperimentRun simulate(const sources::Source& src, std::uint64_t n) {
  apparatus::RunOptions o;
  o.n_trials = n;
  o.seed = 1;
  o.threads = 1;
  o.config_hash = "bench";
  return apparatus::run_experiment(src, station(Station::Alice), station(Station::Bob), o);
}

void BM_SimulateQuantum(benchmark::State& state) {
  const sources::Source src = sources::QuantumReference{};
  for (auto _ : state) benchmark::DoNotOptimize(simulate(src, state.range(0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateQuantum)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_SimulateGg(benchmark::State& state) {
  const sources::Source src = sources::make_gg_adversary();
  for (auto _ : state) benchmark::DoNotOptimize(simulate(src, state.range(0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateGg)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_Pairing(benchmark::State& state) {
  const auto run = simulate(sources::QuantumReference{}, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(analysis::pair_coincidences(run.alice, run.bob, 250));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Pairing)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_EqualDenominatorLp(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(lhvopt::solve_equal_denominator_lp({0.8284}));
  }
}
BENCHMARK(BM_EqualDenominatorLp)->Unit(benchmark::kMillisecond);

void BM_MultistartFallback(benchmark::State& state) {
  lhvopt::OptimizerOptions o;
  o.starts = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lhvopt::solve_multistart({0.8284}, o));
}
BENCHMARK(BM_MultistartFallback)->Arg(4)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_CriticalEfficiency(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(lhvopt::critical_efficiency(2.8284271247461903));
}
BENCHMARK(BM_CriticalEfficiency)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
