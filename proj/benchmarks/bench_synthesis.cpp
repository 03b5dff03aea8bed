#include <benchmark/benchmark.h>

#include "safempc/pipeline.hpp"

using namespace safempc;

namespace {

Scenario scenario(const char* name) {
  return load_scenario(std::string(SAFEMPC_SCENARIO_DIR) + "/" + name + ".json");
}

struct Prepared {
  Network net;
  SafeSet safe;
  PartitionGrid grid;
  CellMask labels;
};

Prepared prepare(const Scenario& sc) {
  auto net = Network::validate(sc.network);
  auto safe = scenario_safe_set(sc, net);
  auto grid = build_partition(net, safe, sc.extra_breakpoints);
  auto labels = label_cells(grid, safe);
  return {std::move(net), std::move(safe), std::move(grid), std::move(labels)};
}

const char* kNames[] = {"desk2", "arterial4", "corridor9"};

}  // namespace

static void BM_BuildTransitions(benchmark::State& state) {
  auto p = prepare(scenario(kNames[state.range(0)]));
  const bool safe_only = state.range(1) != 0;
  for (auto _ : state) {
    auto ts = build_transitions(p.net, p.grid, p.labels, safe_only);
    benchmark::DoNotOptimize(ts.num_transitions());
  }
  state.SetLabel(kNames[state.range(0)]);
}
BENCHMARK(BM_BuildTransitions)->ArgsProduct({{0, 1, 2}, {0, 1}})->Unit(benchmark::kMillisecond);

static void BM_SafetyGame(benchmark::State& state) {
  auto p = prepare(scenario(kNames[state.range(0)]));
  auto ts = build_transitions(p.net, p.grid, p.labels);
  for (auto _ : state) {
    auto win = safety_game(ts, p.labels);
    benchmark::DoNotOptimize(win.member.data());
  }
  state.SetLabel(kNames[state.range(0)]);
}
BENCHMARK(BM_SafetyGame)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

static void BM_ReachabilityGame(benchmark::State& state) {
  auto p = prepare(scenario(kNames[state.range(0)]));
  auto ts = build_transitions(p.net, p.grid, p.labels);
  auto win = safety_game(ts, p.labels);
  for (auto _ : state) {
    auto attr = reachability_game(ts, win.member);
    benchmark::DoNotOptimize(attr.steps.data());
  }
  state.SetLabel(kNames[state.range(0)]);
}
BENCHMARK(BM_ReachabilityGame)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

static void BM_Plan(benchmark::State& state) {
  // the full network has no terminal set, so plan on the mainline variant
  const char* names[] = {"desk2", "arterial4", "corridor9_mainline"};
  auto sc = scenario(names[state.range(0)]);
  sc.mpc.horizon = static_cast<std::size_t>(state.range(1));
  auto syn = synthesize(sc);
  Planner planner(syn.net, syn.grid, syn.safe_cells, syn.win.member, sc.mpc);
  std::mt19937_64 rng(sc.mpc.nominal_seed);
  auto nominal = nominal_demands(syn.net, sc.mpc, 0, rng);
  for (auto _ : state) {
    auto plan = planner.try_plan(sc.initial_state, nominal);
    benchmark::DoNotOptimize(plan);
  }
  state.SetLabel(names[state.range(0)]);
}
BENCHMARK(BM_Plan)->ArgsProduct({{0, 1, 2}, {1, 2, 3}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
