#include <benchmark/benchmark.h>

#include "capa/baselines.hpp"
#include "capa/scenario_io.hpp"
#include "capa/wmmse.hpp"

namespace {

using namespace capa;

ScenarioGeometry desk(std::size_t users) { return sample_scenario(desk_distribution(users), 1); }

void BM_ChannelTables(benchmark::State& state) {
  const auto sc = desk(3);
  const int order = static_cast<int>(state.range(0));
  const auto bg = gl_grid(sc.bs_aperture, order);
  const auto ug = gl_grid(sc.user_aperture, scaled_gl_order(sc.bs_aperture, sc.user_aperture, order));
  for (auto _ : state) benchmark::DoNotOptimize(channel_tables(sc, ug, bg));
  state.SetItemsProcessed(state.iterations() * 3 * static_cast<int64_t>(bg.size() * ug.size()));
}
BENCHMARK(BM_ChannelTables)->Arg(10)->Arg(20)->Arg(40);

void BM_SumRate(benchmark::State& state) {
  const auto sys = make_system(desk(static_cast<std::size_t>(state.range(0))), 20);
  const auto beams = init_state(sys, WmmseConfig{}).beams;
  for (auto _ : state) benchmark::DoNotOptimize(sum_rate(sys, beams));
}
BENCHMARK(BM_SumRate)->Arg(1)->Arg(3)->Arg(5);

// One combiner, weight and bisected beam update.
void BM_WmmseIteration(benchmark::State& state) {
  const auto sys = make_system(desk(3), static_cast<int>(state.range(0)));
  const WmmseConfig cfg;
  const auto st = init_state(sys, cfg);
  for (auto _ : state) {
    const auto cu = update_combiners(sys, st.beams);
    const auto w = update_weights(sys, cu.fields, cu.combiners);
    benchmark::DoNotOptimize(update_beams(sys, cu.combiners, w, cfg));
  }
}
BENCHMARK(BM_WmmseIteration)->Arg(10)->Arg(20);

void BM_FourierSolve(benchmark::State& state) {
  const auto sys = make_system(desk(2), 10);
  for (auto _ : state) benchmark::DoNotOptimize(fourier_solve(sys));
}
BENCHMARK(BM_FourierSolve)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
