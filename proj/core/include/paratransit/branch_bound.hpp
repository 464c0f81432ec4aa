#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paratransit/lp_simplex.hpp"
#include "paratransit/milp_model.hpp"

namespace paratransit {

enum class BranchRule { most_fractional };
enum class NodeSelection {
  best_bound_plunge,  ///< dive into a child after branching, then best-bound
  best_bound,
  depth_first,
};

struct SearchParams {
  double time_limit_s = 30.0;
  std::optional<long> node_limit;
  double gap_target_percent = 0.0;
  BranchRule branching = BranchRule::most_fractional;
  NodeSelection node_selection = NodeSelection::best_bound_plunge;
  /// When set, ties in branching are broken by a seeded hash instead of
  /// lexicographic arc order.
  std::optional<std::uint64_t> tie_seed;
  /// Optional starting incumbent (e.g. decoded from a GCN heatmap).
  std::optional<Routes> warm_start;
  bool verbose = false;
  LpOptions lp;

  void validate() const;
};

enum class Termination { optimal, time_limit, node_limit, gap_target };

const char* to_string(Termination t);

/// One row of results, in the order: n, Q, nodes explored, simplex
/// iterations, run time, objective, gap.
struct SolveStats {
  int requests = 0;  ///< n: persons served (sum of demands)
  int capacity = 0;  ///< Q
  long nodes_explored = 0;
  long simplex_iterations = 0;
  double run_time_s = 0.0;
  double objective = 0.0;
  double best_bound = 0.0;
  double gap_percent = 0.0;
  double root_bound = 0.0;
  Termination termination = Termination::optimal;
  /// Global lower bound after each processed node.
  std::vector<double> bound_trace;
  /// Incumbent objective each time it improves.
  std::vector<double> incumbent_trace;
};

struct SolveResult {
  Routes routes;
  SolveStats stats;
};

/// 100 * (incumbent - best_bound) / max(|incumbent|, 1e-12), clamped at 0.
double compute_gap(double incumbent, double best_bound);

/// Arc variable whose fractional part is closest to 0.5; ties go to the
/// smallest (from, to). Throws std::invalid_argument when no arc variable
/// is fractional beyond the integrality tolerance.
int branch_select(const MilpModel& model, std::span<const double> lp_point,
                  std::optional<std::uint64_t> tie_seed = std::nullopt);

/// Greedy construction: from the depot, repeatedly go to the nearest
/// unvisited customer that still fits; return to the depot and open a new
/// route when none fits. Ties go to the lower node id.
Routes nearest_neighbor_routes(const Instance& instance);

/// LP-based branch and bound on the arc variables.
///
/// Throws InfeasibleError if the root relaxation is infeasible, and
/// NoIncumbentError if a limit is reached before any feasible solution.
SolveResult solve(const MilpModel& model, const SearchParams& params = {});

}  // namespace paratransit
