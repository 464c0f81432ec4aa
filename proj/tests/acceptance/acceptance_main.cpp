// Acceptance checks, one PASS/FAIL line per criterion.
//
//   acceptance            run all criteria
//   acceptance 1 6 8      run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "paratransit/branch_bound.hpp"
#include "paratransit/gcn.hpp"
#include "paratransit/instance.hpp"
#include "paratransit/lp_simplex.hpp"
#include "paratransit/milp_model.hpp"
#include "paratransit/oracle.hpp"
#include "paratransit/random.hpp"
#include "paratransit/scenario.hpp"
#include "paratransit/solution_io.hpp"

using namespace paratransit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// 1 and 3 share the same instance pool.

struct SmallCase {
  Instance instance;
  int target_routes = 1;
};

std::vector<SmallCase> small_pool() {
  std::vector<SmallCase> pool;
  Rng rng(20240531);
  for (int k = 0; k < 60; ++k) {
    GeneratorConfig cfg;
    cfg.demand_mode = k % 2 == 0 ? DemandMode::unit : DemandMode::grouped;
    cfg.max_group = 3;
    // Customers stay at or below 7 in both modes.
    cfg.request_count = cfg.demand_mode == DemandMode::unit ? static_cast<int>(rng.uniform_int(2, 7))
                                                            : static_cast<int>(rng.uniform_int(3, 9));
    const int routes = static_cast<int>(rng.uniform_int(1, 3));
    cfg.capacity = std::max(3, (cfg.request_count + routes - 1) / routes);
    Instance inst = generate_instance(cfg, 1000 + static_cast<std::uint64_t>(k));
    if (inst.customer_count() > 7) continue;
    pool.push_back({std::move(inst), routes});
  }
  return pool;
}

struct PoolSolve {
  double bb = 0.0;
  double oracle = 0.0;
  double root = 0.0;
  std::vector<double> trace;
  std::size_t routes = 0;
};

const std::vector<PoolSolve>& pool_results() {
  static const std::vector<PoolSolve> results = [] {
    std::vector<PoolSolve> out;
    for (const auto& c : small_pool()) {
      const SolveResult r = solve(build_model(c.instance));
      PoolSolve p;
      p.bb = r.stats.objective;
      p.oracle = exact_cvrp(c.instance).objective;
      p.root = solve_lp(relax(build_model(c.instance))).objective;
      p.trace = r.stats.bound_trace;
      p.routes = r.routes.size();
      out.push_back(std::move(p));
    }
    return out;
  }();
  return results;
}

Outcome oracle_equivalence() {
  const auto& res = pool_results();
  double worst = 0.0;
  std::set<std::size_t> route_counts;
  for (const auto& r : res) {
    worst = std::max(worst, std::abs(r.bb - r.oracle));
    route_counts.insert(r.routes);
  }
  std::ostringstream os;
  os << res.size() << " instances, max |bb - oracle| = " << worst << ", route counts seen:";
  for (auto k : route_counts) os << " " << k;
  return {res.size() >= 50 && worst <= 1e-9, os.str()};
}

Outcome single_route() {
  int count = 0, unproven = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    GeneratorConfig cfg;
    cfg.demand_mode = seed % 2 ? DemandMode::unit : DemandMode::grouped;
    cfg.request_count = 3 + static_cast<int>(seed % 7);
    cfg.capacity = cfg.request_count + static_cast<int>(seed % 3);
    cfg.max_group = 3;
    const Instance inst = generate_instance(cfg, 500 + seed);
    std::vector<int> customers;
    for (int i = 1; i < inst.depot_end(); ++i) customers.push_back(i);
    const double tsp = held_karp_tsp(inst.costs, customers).cost;
    SearchParams params;
    params.time_limit_s = 600.0;
    const SolveResult r = solve(build_model(inst), params);
    if (r.stats.termination != Termination::optimal) ++unproven;
    worst = std::max(worst, std::abs(r.stats.objective - tsp));
    ++count;
  }
  return {count >= 20 && worst <= 1e-9 && unproven == 0,
          std::to_string(count) + " instances with Q >= sum q, max |bb - tsp| = " + fmt("%.3g", worst) +
              ", not proven optimal: " + std::to_string(unproven)};
}

Outcome bound_dominance() {
  const auto& res = pool_results();
  int root_violations = 0, trace_violations = 0;
  for (const auto& r : res) {
    if (r.root > r.oracle + 1e-9) ++root_violations;
    for (std::size_t k = 1; k < r.trace.size(); ++k) {
      if (r.trace[k] < r.trace[k - 1]) ++trace_violations;
    }
  }
  return {root_violations == 0 && trace_violations == 0,
          std::to_string(res.size()) + " instances, root > optimum: " + std::to_string(root_violations) +
              ", bound decreases: " + std::to_string(trace_violations)};
}

// ---------------------------------------------------------------------------
// 4 and 5 share the default grid.

const std::vector<GridRow>& default_grid() {
  static const std::vector<GridRow> rows = [] {
    GridConfig c;
    c.time_limit_s = 30.0;
    return run_scenario_grid(c);
  }();
  return rows;
}

Outcome grid_structure() {
  const auto& rows = default_grid();
  const std::string csv = grid_to_csv(rows);
  std::istringstream is(csv);
  std::string header;
  std::getline(is, header);
  int data_lines = 0, bad_columns = 0, optimal = 0, limited = 0, bad_optimal = 0, bad_limited = 0;
  for (std::string line; std::getline(is, line);) {
    ++data_lines;
    if (std::count(line.begin(), line.end(), ',') != 6) ++bad_columns;
  }
  for (const auto& r : rows) {
    if (!r.stats) {
      ++bad_limited;
      continue;
    }
    const auto& s = *r.stats;
    if (s.termination == Termination::optimal) {
      ++optimal;
      if (s.gap_percent != 0.0) ++bad_optimal;
    } else {
      ++limited;
      if (s.run_time_s < 30.0 || s.run_time_s > 31.0 || !(s.gap_percent > 0.0)) ++bad_limited;
    }
  }
  const bool pass = rows.size() == 15 && data_lines == 15 && bad_columns == 0 && header == kStatsCsvHeader &&
                    bad_optimal == 0 && bad_limited == 0;
  std::ostringstream os;
  os << rows.size() << " rows, " << optimal << " optimal (gap 0), " << limited
     << " time-limited in [30, 31] s with gap > 0; violations " << bad_columns + bad_optimal + bad_limited;
  return {pass, os.str()};
}

Outcome magnitude_band() {
  const auto& rows = default_grid();
  double lo = 1e300, hi = -1e300;
  int outside = 0;
  for (const auto& r : rows) {
    if (!r.stats) {
      ++outside;
      continue;
    }
    lo = std::min(lo, r.stats->objective);
    hi = std::max(hi, r.stats->objective);
    if (r.stats->objective < 0.005 || r.stats->objective > 0.10) ++outside;
  }
  return {rows.size() == 15 && outside == 0,
          "objectives in [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "], outside band: " + std::to_string(outside)};
}

// ---------------------------------------------------------------------------

Outcome gcn_algebra() {
  bool uniform = true;
  for (int n = 1; n <= 41; ++n) {
    const gcn::Matrix h = gcn::normalized_adjacency(gcn::complete_adjacency(n));
    for (int i = 0; i < n && uniform; ++i)
      for (int j = 0; j < n && uniform; ++j) uniform = h(i, j) == 1.0 / n;
  }

  double equiv = 0.0;
  GeneratorConfig cfg;
  cfg.request_count = 15;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Instance inst = generate_instance(cfg, seed);
    const auto ex = gcn::make_training_example(inst, nearest_neighbor_routes(inst));
    const gcn::Model model = gcn::init_model({}, seed);
    const int n = static_cast<int>(ex.features.rows());
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed + 7);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    gcn::Matrix p = gcn::Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) p(i, perm[i]) = 1.0;
    const auto a = gcn::forward(model, ex.features, ex.a_hat, ex.edge_costs);
    const auto b = gcn::forward(model, p * ex.features, p * ex.a_hat * p.transpose(), p * ex.edge_costs * p.transpose());
    equiv = std::max(equiv, (b.heatmap - p * a.heatmap * p.transpose()).cwiseAbs().maxCoeff());
    equiv = std::max(equiv, (b.embeddings - p * a.embeddings).cwiseAbs().maxCoeff());
  }

  double grad = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GeneratorConfig small;
    small.request_count = 7;
    small.capacity = 3;
    small.max_group = 2;
    const Instance inst = generate_instance(small, 300 + seed);
    const auto ex = gcn::make_training_example(inst, exact_cvrp(inst).routes);
    const auto report = gcn::gradient_check(gcn::init_model({4, 6, 3, 6}, seed), {ex});
    grad = std::max(grad, report.max_relative_error);
    checked += report.checked;
  }
  std::ostringstream os;
  os << "K_N uniform: " << (uniform ? "exact" : "NO") << ", equivariance err " << equiv << ", gradcheck max rel err "
     << grad << " over " << checked << " coordinates";
  return {uniform && equiv <= 1e-9 && grad <= 1e-4, os.str()};
}

struct LearningRun {
  double before = 0.0;
  double after = 0.0;
  int feasible = 0;
  double mean_ratio = 0.0;
};

// On the complete graph A_hat is uniform, so every node embedding is the same
// vector and only c_ij separates edges. A sparse input graph keeps the nodes apart.
LearningRun learning_run(std::optional<int> knn) {
  GeneratorConfig cfg;
  cfg.request_count = 10;
  cfg.capacity = 6;
  cfg.max_group = 3;
  gcn::GraphOptions graph;
  graph.knn = knn;
  std::vector<gcn::Example> train_set, held_out;
  std::vector<Instance> held_instances;
  std::vector<double> held_costs;
  for (std::uint64_t k = 0; k < 200; ++k) {
    const Instance inst = generate_instance(cfg, 10'000 + k);
    train_set.push_back(gcn::make_training_example(inst, exact_cvrp(inst).routes, graph));
  }
  for (std::uint64_t k = 0; k < 50; ++k) {
    Instance inst = generate_instance(cfg, 90'000 + k);
    const OracleResult best = exact_cvrp(inst);
    held_out.push_back(gcn::make_training_example(inst, best.routes, graph));
    held_costs.push_back(best.objective);
    held_instances.push_back(std::move(inst));
  }

  const gcn::Model init = gcn::init_model({}, 2024);
  gcn::TrainParams tp;
  tp.epochs = 300;
  tp.batch_size = 10;
  tp.learning_rate = 3e-3;
  tp.seed = 7;
  const auto trained = gcn::train(init, train_set, tp);

  LearningRun run;
  run.before = gcn::loss_and_gradient(init, held_out, nullptr);
  run.after = gcn::loss_and_gradient(trained.model, held_out, nullptr);
  double ratio_sum = 0.0;
  for (std::size_t k = 0; k < held_instances.size(); ++k) {
    const auto& ex = held_out[k];
    const auto fwd = gcn::forward(trained.model, ex.features, ex.a_hat, ex.edge_costs);
    const Routes routes = gcn::decode_routes(fwd.heatmap, held_instances[k], 5);
    if (check_feasibility(held_instances[k], routes).empty()) ++run.feasible;
    ratio_sum += routes_cost(held_instances[k], routes) / held_costs[k];
  }
  run.mean_ratio = ratio_sum / static_cast<double>(held_instances.size());
  return run;
}

Outcome gcn_learning() {
  const LearningRun knn = learning_run(2);
  const LearningRun complete = learning_run(std::nullopt);
  const double reduction = 1.0 - knn.after / knn.before;
  std::ostringstream os;
  os << "knn=2 graph: held-out loss " << knn.before << " -> " << knn.after << " ("
     << fmt("%.1f", 100 * reduction) << "% lower), feasible " << knn.feasible << "/50, mean cost ratio "
     << fmt("%.3f", knn.mean_ratio) << "; complete graph reference: " << fmt("%.1f", 100 * (1 - complete.after / complete.before))
     << "% lower, ratio " << fmt("%.3f", complete.mean_ratio);
  return {reduction >= 0.30 && knn.feasible == 50 && knn.mean_ratio <= 1.5, os.str()};
}

Outcome determinism() {
  GeneratorConfig cfg;
  cfg.request_count = 30;
  cfg.capacity = 15;
  const Instance a = generate_instance(cfg, 77);
  const Instance b = generate_instance(cfg, 77);
  bool same = a == b;
  for (int rep = 0; rep < 2 && same; ++rep) {
    SearchParams p;
    p.node_limit = 400;
    p.time_limit_s = 600;
    const auto s1 = solve(build_model(a), p).stats;
    const auto s2 = solve(build_model(b), p).stats;
    same = s1.objective == s2.objective && s1.gap_percent == s2.gap_percent &&
           s1.nodes_explored == s2.nodes_explored && s1.simplex_iterations == s2.simplex_iterations;
  }
  GridConfig g;
  g.requests = {10, 20, 40};
  g.capacities = {10, 20};
  g.node_limit = 200;
  g.time_limit_s = 600;
  g.seed_base = 5;
  const auto r1 = run_scenario_grid(g);
  const auto r2 = run_scenario_grid(g);
  bool grid_same = r1.size() == r2.size();
  for (std::size_t k = 0; k < r1.size() && grid_same; ++k) {
    grid_same = r1[k].stats && r2[k].stats && r1[k].stats->objective == r2[k].stats->objective &&
                r1[k].stats->gap_percent == r2[k].stats->gap_percent &&
                r1[k].stats->nodes_explored == r2[k].stats->nodes_explored &&
                r1[k].stats->simplex_iterations == r2[k].stats->simplex_iterations;
  }
  // The optimally solved cells of the default grid do not depend on the clock either.
  GridConfig d;
  d.requests = {10, 15};
  const auto d1 = run_scenario_grid(d);
  const auto d2 = run_scenario_grid(d);
  for (std::size_t k = 0; k < d1.size() && grid_same; ++k) {
    grid_same = d1[k].stats->nodes_explored == d2[k].stats->nodes_explored &&
                d1[k].stats->simplex_iterations == d2[k].stats->simplex_iterations &&
                d1[k].stats->objective == d2[k].stats->objective;
  }
  return {same && grid_same, std::string("repeat solve ") + (same ? "identical" : "DIFFERS") + ", repeat grid " +
                                 (grid_same ? "identical" : "DIFFERS")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", oracle_equivalence},
      {2, "single-route optimality", single_route},
      {3, "LP bound dominance", bound_dominance},
      {4, "grid structure", grid_structure},
      {5, "magnitude band", magnitude_band},
      {6, "GCN algebra", gcn_algebra},
      {7, "GCN learning", gcn_learning},
      {8, "determinism", determinism},
  };
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
