#include <benchmark/benchmark.h>

#include "paratransit/branch_bound.hpp"
#include "paratransit/gcn.hpp"
#include "paratransit/lp_simplex.hpp"
#include "paratransit/oracle.hpp"

using namespace paratransit;

namespace {

Instance unit_instance(int requests, int capacity) {
  GeneratorConfig cfg;
  cfg.request_count = requests;
  cfg.capacity = capacity;
  cfg.demand_mode = DemandMode::unit;
  return generate_instance(cfg, 42);
}

void BM_Generate(benchmark::State& state) {
  GeneratorConfig cfg;
  cfg.request_count = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_instance(cfg, seed++));
}
BENCHMARK(BM_Generate)->Arg(10)->Arg(40);

void BM_RootRelaxation(benchmark::State& state) {
  const MilpModel model = build_model(unit_instance(static_cast<int>(state.range(0)), 15));
  const LpProblem lp = relax(model);
  long iterations = 0;
  for (auto _ : state) {
    const LpSolution s = solve_lp(lp);
    iterations = s.iterations;
    benchmark::DoNotOptimize(s.objective);
  }
  state.counters["iterations"] = static_cast<double>(iterations);
}
BENCHMARK(BM_RootRelaxation)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_BranchAndBound(benchmark::State& state) {
  const MilpModel model = build_model(unit_instance(static_cast<int>(state.range(0)), 4));
  SearchParams params;
  params.node_limit = 200;
  for (auto _ : state) benchmark::DoNotOptimize(solve(model, params).stats.objective);
}
BENCHMARK(BM_BranchAndBound)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_HeldKarp(benchmark::State& state) {
  const Instance inst = unit_instance(static_cast<int>(state.range(0)), 40);
  std::vector<int> customers;
  for (int i = 1; i < inst.depot_end(); ++i) customers.push_back(i);
  for (auto _ : state) benchmark::DoNotOptimize(held_karp_tsp(inst.costs, customers).cost);
}
BENCHMARK(BM_HeldKarp)->DenseRange(8, 14, 3)->Unit(benchmark::kMillisecond);

void BM_ExactCvrp(benchmark::State& state) {
  const Instance inst = unit_instance(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(exact_cvrp(inst).objective);
}
BENCHMARK(BM_ExactCvrp)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_GcnForward(benchmark::State& state) {
  const Instance inst = unit_instance(static_cast<int>(state.range(0)), 10);
  const gcn::Model model = gcn::init_model({}, 1);
  const gcn::Matrix features = gcn::node_features(inst);
  const gcn::Matrix a_hat = gcn::normalized_adjacency(gcn::complete_adjacency(static_cast<int>(features.rows())));
  const gcn::Matrix costs = gcn::edge_features(inst);
  for (auto _ : state) benchmark::DoNotOptimize(gcn::forward(model, features, a_hat, costs).heatmap.sum());
}
BENCHMARK(BM_GcnForward)->Arg(10)->Arg(40)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
