#pragma once

#include <span>
#include <vector>

#include "paratransit/instance.hpp"
#include "paratransit/milp_model.hpp"

namespace paratransit {

inline constexpr int kHeldKarpMaxCustomers = 15;
inline constexpr int kPartitionMaxCustomers = 8;

struct TspPath {
  double cost = 0.0;
  std::vector<int> order;  ///< customers in visiting order, depots excluded
};

/// Cheapest depot_start -> (all of `customers`) -> depot_end path by
/// bitmask dynamic programming. Throws SizeError above kHeldKarpMaxCustomers.
TspPath held_karp_tsp(const CostMatrix& costs, std::span<const int> customers);

struct OracleResult {
  double objective = 0.0;
  Routes routes;
  long partitions_evaluated = 0;
};

/// Exact CVRP optimum: the cheapest capacity-feasible set partition of the
/// customers, each block routed by held_karp_tsp. Ties go to fewer routes,
/// then to the lexicographically smallest route list.
///
/// Throws InfeasibleError if some q_i > Q and SizeError above
/// kPartitionMaxCustomers customers.
OracleResult exact_cvrp(const Instance& instance);

}  // namespace paratransit
