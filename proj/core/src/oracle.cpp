#include "paratransit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "paratransit/errors.hpp"

namespace paratransit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTolerance = 1e-12;

// A route and its reverse cost the same on a symmetric matrix; orient so the
// first customer has the smaller id.
void orient(std::vector<int>& order) {
  if (order.size() > 1 && order.front() > order.back()) std::reverse(order.begin(), order.end());
}

}  // namespace

TspPath held_karp_tsp(const CostMatrix& costs, std::span<const int> customers) {
  const int k = static_cast<int>(customers.size());
  if (k > kHeldKarpMaxCustomers) {
    throw SizeError("held_karp_tsp: " + std::to_string(k) + " customers exceeds the cap of " +
                    std::to_string(kHeldKarpMaxCustomers));
  }
  const std::size_t start = 0;
  const std::size_t end = costs.size() - 1;
  if (k == 0) return {costs(start, end), {}};

  auto node = [&](int i) { return static_cast<std::size_t>(customers[static_cast<std::size_t>(i)]); };
  const std::size_t full = (std::size_t{1} << k) - 1;
  std::vector<double> dp((full + 1) * static_cast<std::size_t>(k), kInf);
  std::vector<int> parent((full + 1) * static_cast<std::size_t>(k), -1);
  auto at = [&](std::size_t mask, int last) { return mask * static_cast<std::size_t>(k) + static_cast<std::size_t>(last); };

  for (int i = 0; i < k; ++i) dp[at(std::size_t{1} << i, i)] = costs(start, node(i));
  for (std::size_t mask = 1; mask <= full; ++mask) {
    for (int last = 0; last < k; ++last) {
      if (!(mask >> last & 1U)) continue;
      const double base = dp[at(mask, last)];
      if (base == kInf) continue;
      for (int next = 0; next < k; ++next) {
        if (mask >> next & 1U) continue;
        const std::size_t grown = mask | (std::size_t{1} << next);
        const double cand = base + costs(node(last), node(next));
        // Strict improvement keeps the lowest-index predecessor on ties.
        if (cand < dp[at(grown, next)] - kTieTolerance) {
          dp[at(grown, next)] = cand;
          parent[at(grown, next)] = last;
        }
      }
    }
  }

  int last = -1;
  double best = kInf;
  for (int i = 0; i < k; ++i) {
    const double total = dp[at(full, i)] + costs(node(i), end);
    if (total < best - kTieTolerance) {
      best = total;
      last = i;
    }
  }
  TspPath path;
  path.cost = best;
  std::size_t mask = full;
  while (last >= 0) {
    path.order.push_back(customers[static_cast<std::size_t>(last)]);
    const int prev = parent[at(mask, last)];
    mask &= ~(std::size_t{1} << last);
    last = prev;
  }
  std::reverse(path.order.begin(), path.order.end());
  return path;
}

OracleResult exact_cvrp(const Instance& instance) {
  const int n = instance.customer_count();
  for (int i = 1; i <= n; ++i) {
    if (instance.demand(i) > instance.capacity) {
      throw InfeasibleError("exact_cvrp: customer " + std::to_string(i) + " demand exceeds capacity");
    }
  }
  if (n > kPartitionMaxCustomers) {
    throw SizeError("exact_cvrp: " + std::to_string(n) + " customers exceeds the cap of " +
                    std::to_string(kPartitionMaxCustomers));
  }

  // Cost and orientation of every capacity-feasible customer subset.
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> block_cost(subsets, kInf);
  std::vector<std::vector<int>> block_order(subsets);
  std::vector<int> block_load(subsets, 0);
  for (std::size_t mask = 1; mask < subsets; ++mask) {
    std::vector<int> members;
    int load = 0;
    for (int i = 0; i < n; ++i) {
      if (mask >> i & 1U) {
        members.push_back(i + 1);
        load += instance.demand(i + 1);
      }
    }
    block_load[mask] = load;
    if (load > instance.capacity) continue;
    TspPath path = held_karp_tsp(instance.costs, members);
    orient(path.order);
    block_cost[mask] = path.cost;
    block_order[mask] = std::move(path.order);
  }

  OracleResult result;
  result.objective = kInf;
  std::vector<std::vector<int>> best_routes;

  std::vector<std::size_t> blocks;
  auto canonical = [&](const std::vector<std::size_t>& bs) {
    std::vector<std::vector<int>> rs;
    for (auto b : bs) rs.push_back(block_order[b]);
    std::sort(rs.begin(), rs.end());
    return rs;
  };
  auto consider = [&]() {
    ++result.partitions_evaluated;
    double total = 0.0;
    for (auto b : blocks) total += block_cost[b];
    const bool cheaper = total < result.objective - kTieTolerance;
    const bool tied = std::abs(total - result.objective) <= kTieTolerance;
    if (!cheaper && !tied) return;
    if (cheaper) {
      result.objective = total;
      best_routes = canonical(blocks);
      return;
    }
    auto cand = canonical(blocks);
    if (cand.size() < best_routes.size() || (cand.size() == best_routes.size() && cand < best_routes)) {
      result.objective = std::min(result.objective, total);
      best_routes = std::move(cand);
    }
  };

  // Restricted-growth enumeration: customer i joins an existing block or opens a new one.
  auto place = [&](auto&& self, int i) -> void {
    if (i == n) {
      consider();
      return;
    }
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const std::size_t grown = blocks[b] | bit;
      if (block_load[grown] > instance.capacity) continue;
      blocks[b] = grown;
      self(self, i + 1);
      blocks[b] &= ~bit;
    }
    blocks.push_back(bit);
    self(self, i + 1);
    blocks.pop_back();
  };
  place(place, 0);

  for (const auto& order : best_routes) {
    Route r;
    r.nodes.push_back(instance.depot_start());
    r.nodes.insert(r.nodes.end(), order.begin(), order.end());
    r.nodes.push_back(instance.depot_end());
    result.routes.push_back(std::move(r));
  }
  fill_loads(instance, result.routes);
  result.objective = routes_cost(instance, result.routes);
  return result;
}

}  // namespace paratransit
