#include "paratransit/branch_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "paratransit/errors.hpp"
#include "paratransit/random.hpp"

namespace paratransit {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPruneTolerance = 1e-10;
constexpr double kGapZeroTolerance = 1e-9;

struct SearchNode {
  std::vector<BoundFixing> fixings;
  double bound = 0.0;
  int depth = 0;
  long id = 0;
};

// Open nodes indexed both by bound (best-first) and by creation order (LIFO).
class OpenNodes {
 public:
  void push(SearchNode node) {
    by_bound_.insert({node.bound, node.id});
    const long id = node.id;
    nodes_.emplace(id, std::move(node));
  }
  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  double min_bound() const { return by_bound_.empty() ? kInf : by_bound_.begin()->first; }

  SearchNode pop_best() { return take(by_bound_.begin()->second); }
  SearchNode pop_newest() { return take(nodes_.rbegin()->first); }

  void prune_above(double cutoff) {
    while (!by_bound_.empty() && std::prev(by_bound_.end())->first >= cutoff) {
      const long id = std::prev(by_bound_.end())->second;
      take(id);
    }
  }

 private:
  SearchNode take(long id) {
    auto it = nodes_.find(id);
    SearchNode node = std::move(it->second);
    nodes_.erase(it);
    by_bound_.erase({node.bound, node.id});
    return node;
  }

  std::map<long, SearchNode> nodes_;
  std::set<std::pair<double, long>> by_bound_;
};

bool is_integral(const MilpModel& model, const std::vector<double>& values) {
  for (int v = 0; v < model.num_arc_vars(); ++v) {
    const double x = values[static_cast<std::size_t>(v)];
    if (std::abs(x - std::round(x)) > MilpModel::kIntegralityTolerance) return false;
  }
  return true;
}

bool respects_vehicle_limits(const MilpModel& model, const Routes& routes) {
  const auto count = static_cast<int>(routes.size());
  const auto& opt = model.options();
  if (opt.min_vehicles && count < *opt.min_vehicles) return false;
  if (opt.max_vehicles && count > *opt.max_vehicles) return false;
  return true;
}

}  // namespace

void SearchParams::validate() const {
  if (!(time_limit_s > 0.0)) throw std::invalid_argument("time_limit must be > 0");
  if (node_limit && *node_limit < 1) throw std::invalid_argument("node_limit must be >= 1");
  if (gap_target_percent < 0.0) throw std::invalid_argument("gap_target must be >= 0");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::optimal: return "optimal";
    case Termination::time_limit: return "time-limit";
    case Termination::node_limit: return "node-limit";
    case Termination::gap_target: return "gap-target";
  }
  return "unknown";
}

double compute_gap(double incumbent, double best_bound) {
  const double gap = 100.0 * (incumbent - best_bound) / std::max(std::abs(incumbent), 1e-12);
  return gap > 0.0 ? gap : 0.0;
}

int branch_select(const MilpModel& model, std::span<const double> lp_point,
                  std::optional<std::uint64_t> tie_seed) {
  int best = -1;
  double best_distance = kInf;
  std::uint64_t best_key = 0;
  for (int v = 0; v < model.num_arc_vars(); ++v) {
    const double x = lp_point[static_cast<std::size_t>(v)];
    const double frac = x - std::floor(x);
    if (std::abs(x - std::round(x)) <= MilpModel::kIntegralityTolerance) continue;
    const double distance = std::abs(frac - 0.5);
    const std::uint64_t key = tie_seed ? splitmix64(*tie_seed ^ static_cast<std::uint64_t>(v))
                                       : static_cast<std::uint64_t>(v);
    if (distance < best_distance - 1e-12 ||
        (std::abs(distance - best_distance) <= 1e-12 && key < best_key)) {
      best = v;
      best_distance = distance;
      best_key = key;
    }
  }
  if (best < 0) throw std::invalid_argument("branch_select: LP point is integral");
  return best;
}

Routes nearest_neighbor_routes(const Instance& instance) {
  const int end = instance.depot_end();
  std::vector<char> visited(static_cast<std::size_t>(instance.node_count()), 0);
  int remaining = instance.customer_count();
  Routes routes;
  while (remaining > 0) {
    Route r;
    r.nodes.push_back(instance.depot_start());
    int cur = instance.depot_start();
    while (true) {
      int next = -1;
      double next_cost = kInf;
      for (int j = 1; j < end; ++j) {
        if (visited[static_cast<std::size_t>(j)] || r.load + instance.demand(j) > instance.capacity) continue;
        if (instance.cost(cur, j) < next_cost) {
          next = j;
          next_cost = instance.cost(cur, j);
        }
      }
      if (next < 0) break;
      visited[static_cast<std::size_t>(next)] = 1;
      --remaining;
      r.nodes.push_back(next);
      r.load += instance.demand(next);
      cur = next;
    }
    if (r.nodes.size() == 1) {
      throw InfeasibleError("nearest_neighbor_routes: a customer demand exceeds capacity");
    }
    r.nodes.push_back(end);
    routes.push_back(std::move(r));
  }
  return routes;
}

SolveResult solve(const MilpModel& model, const SearchParams& params) {
  params.validate();
  const auto start = Clock::now();
  const auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                                    std::chrono::duration<double>(params.time_limit_s));
  const Instance& inst = model.instance();

  SolveResult result;
  SolveStats& stats = result.stats;
  stats.requests = inst.total_demand();
  stats.capacity = inst.capacity;

  double incumbent = kInf;
  auto offer = [&](const Routes& routes) {
    if (!check_feasibility(inst, routes).empty() || !respects_vehicle_limits(model, routes)) return;
    const double cost = routes_cost(inst, routes);
    if (cost < incumbent) {
      incumbent = cost;
      result.routes = routes;
      stats.incumbent_trace.push_back(cost);
      if (params.verbose) std::cerr << "[bb] incumbent " << cost << "\n";
    }
  };
  if (params.warm_start) offer(*params.warm_start);
  offer(nearest_neighbor_routes(inst));

  LpOptions lp_options = params.lp;
  lp_options.deadline = deadline;

  OpenNodes open;
  std::optional<SearchNode> dive;
  long next_id = 0;
  open.push({{}, 0.0, 0, next_id++});

  auto global_bound = [&]() {
    double b = open.min_bound();
    if (dive) b = std::min(b, dive->bound);
    return std::min(b, incumbent);
  };
  auto cutoff = [&]() {
    return std::isfinite(incumbent) ? incumbent - kPruneTolerance * std::max(1.0, std::abs(incumbent)) : kInf;
  };

  bool limit_hit = false;
  bool gap_hit = false;
  Termination limit_kind = Termination::time_limit;
  bool root_done = false;

  while (true) {
    SearchNode node;
    if (dive) {
      node = std::move(*dive);
      dive.reset();
    } else if (open.empty()) {
      break;
    } else if (params.node_selection == NodeSelection::depth_first) {
      node = open.pop_newest();
    } else {
      node = open.pop_best();
    }
    if (node.bound >= cutoff()) continue;

    const bool out_of_time = Clock::now() >= deadline;
    const bool out_of_nodes = params.node_limit && stats.nodes_explored >= *params.node_limit;
    if (out_of_time || out_of_nodes) {
      open.push(std::move(node));
      limit_hit = true;
      limit_kind = out_of_time ? Termination::time_limit : Termination::node_limit;
      break;
    }

    const LpSolution lp = solve_lp(relax(model, node.fixings), lp_options);
    stats.simplex_iterations += lp.iterations;
    if (lp.status == LpStatus::time_limit || lp.status == LpStatus::iteration_limit) {
      open.push(std::move(node));
      limit_hit = true;
      limit_kind = Termination::time_limit;
      ++stats.nodes_explored;
      break;
    }
    ++stats.nodes_explored;

    if (!root_done) {
      root_done = true;
      if (lp.status == LpStatus::infeasible) {
        throw InfeasibleError("root LP relaxation is infeasible");
      }
      stats.root_bound = lp.objective;
    }

    if (lp.status == LpStatus::optimal) {
      const double bound = std::max(node.bound, lp.objective);
      if (bound < cutoff()) {
        if (is_integral(model, lp.values)) {
          std::vector<double> rounded(lp.values);
          for (int v = 0; v < model.num_arc_vars(); ++v) {
            rounded[static_cast<std::size_t>(v)] = std::round(rounded[static_cast<std::size_t>(v)]);
          }
          offer(assignment_to_routes(model, rounded));
        } else {
          const int var = branch_select(model, lp.values, params.tie_seed);
          const double value = lp.values[static_cast<std::size_t>(var)];
          SearchNode up{node.fixings, bound, node.depth + 1, next_id++};
          up.fixings.push_back({var, 1.0, 1.0});
          SearchNode down{std::move(node.fixings), bound, node.depth + 1, next_id++};
          down.fixings.push_back({var, 0.0, 0.0});
          const bool prefer_up = value >= 0.5;
          if (params.node_selection == NodeSelection::best_bound_plunge) {
            if (prefer_up) {
              open.push(std::move(down));
              dive = std::move(up);
            } else {
              open.push(std::move(up));
              dive = std::move(down);
            }
          } else if (params.node_selection == NodeSelection::depth_first) {
            // the newest node is explored first
            if (prefer_up) {
              open.push(std::move(down));
              open.push(std::move(up));
            } else {
              open.push(std::move(up));
              open.push(std::move(down));
            }
          } else {
            open.push(std::move(up));
            open.push(std::move(down));
          }
        }
      }
    }

    stats.bound_trace.push_back(global_bound());
    if (params.verbose && stats.nodes_explored % 100 == 0) {
      std::cerr << "[bb] nodes=" << stats.nodes_explored << " open=" << open.size()
                << " bound=" << stats.bound_trace.back() << " incumbent=" << incumbent << "\n";
    }
    if (params.gap_target_percent > 0.0 && std::isfinite(incumbent) &&
        compute_gap(incumbent, global_bound()) <= params.gap_target_percent) {
      gap_hit = true;
      break;
    }
  }

  stats.run_time_s = std::chrono::duration<double>(Clock::now() - start).count();

  if (!std::isfinite(incumbent)) {
    const double bound = std::min(open.min_bound(), dive ? dive->bound : kInf);
    if (!limit_hit) throw InfeasibleError("no feasible routing exists for this model");
    throw NoIncumbentError("search limit reached without a feasible solution", bound);
  }

  if (dive) {
    open.push(std::move(*dive));
    dive.reset();
  }
  open.prune_above(cutoff());
  stats.objective = incumbent;
  if (open.empty()) {
    stats.termination = Termination::optimal;
    stats.best_bound = incumbent;
    stats.gap_percent = 0.0;
  } else {
    stats.best_bound = std::min(open.min_bound(), incumbent);
    stats.gap_percent = compute_gap(incumbent, stats.best_bound);
    if (stats.gap_percent <= kGapZeroTolerance) {
      stats.termination = Termination::optimal;
      stats.best_bound = incumbent;
      stats.gap_percent = 0.0;
    } else {
      stats.termination = gap_hit ? Termination::gap_target : limit_kind;
    }
  }
  if (stats.bound_trace.empty() || stats.bound_trace.back() != stats.best_bound) {
    stats.bound_trace.push_back(stats.best_bound);
  }
  return result;
}

}  // namespace paratransit
