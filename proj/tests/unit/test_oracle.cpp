#include <gtest/gtest.h>

#include "paratransit/errors.hpp"
#include "paratransit/oracle.hpp"
#include "test_support.hpp"

using namespace paratransit;
using paratransit::fixtures::brute_force_cvrp;
using paratransit::fixtures::brute_force_tsp;
using paratransit::fixtures::planar_instance;

namespace {

long bell(int n) {
  // Bell triangle.
  std::vector<long> row{1};
  for (int k = 0; k < n; ++k) {
    std::vector<long> next{row.back()};
    for (long v : row) next.push_back(next.back() + v);
    row = next;
  }
  return row.front();
}

std::vector<int> all_customers(const Instance& inst) {
  std::vector<int> c;
  for (int i = 1; i < inst.depot_end(); ++i) c.push_back(i);
  return c;
}

}  // namespace

TEST(HeldKarp, UnitSquare) {
  const Instance inst = planar_instance({{1, 0}, {1, 1}, {0, 1}}, {1, 1, 1}, 3);
  const TspPath t = held_karp_tsp(inst.costs, all_customers(inst));
  EXPECT_DOUBLE_EQ(t.cost, 4.0);
  EXPECT_EQ(t.order.size(), 3u);
}

TEST(HeldKarp, MatchesPermutations) {
  for (int n = 1; n <= 7; ++n) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      GeneratorConfig cfg;
      cfg.demand_mode = DemandMode::unit;
      cfg.request_count = n;
      const Instance inst = generate_instance(cfg, seed * 31 + n);
      const TspPath t = held_karp_tsp(inst.costs, all_customers(inst));
      EXPECT_NEAR(t.cost, brute_force_tsp(inst), 1e-15);
      EXPECT_NEAR(fixtures::path_cost(inst, t.order), t.cost, 1e-15);
    }
  }
}

TEST(HeldKarp, SubsetAndCaps) {
  const Instance inst = planar_instance({{1, 0}, {5, 5}, {2, 0}}, {1, 1, 1}, 3);
  const std::vector<int> subset{1, 3};
  const TspPath t = held_karp_tsp(inst.costs, subset);
  EXPECT_DOUBLE_EQ(t.cost, 4.0);
  std::vector<int> visited = t.order;
  std::sort(visited.begin(), visited.end());
  EXPECT_EQ(visited, subset);

  GeneratorConfig cfg;
  cfg.demand_mode = DemandMode::unit;
  cfg.request_count = kHeldKarpMaxCustomers + 1;
  const Instance big = generate_instance(cfg, 1);
  EXPECT_THROW(held_karp_tsp(big.costs, all_customers(big)), SizeError);
}

TEST(ExactCvrp, UnitSquareSingleRoute) {
  const Instance inst = planar_instance({{1, 0}, {1, 1}, {0, 1}}, {1, 1, 1}, 3);
  const OracleResult r = exact_cvrp(inst);
  EXPECT_DOUBLE_EQ(r.objective, 4.0);
  ASSERT_EQ(r.routes.size(), 1u);
  EXPECT_EQ(r.routes[0].nodes, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(ExactCvrp, MatchesPermutationBruteForce) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    GeneratorConfig cfg;
    cfg.demand_mode = seed % 3 ? DemandMode::grouped : DemandMode::unit;
    cfg.request_count = 3 + static_cast<int>(seed % 5);
    cfg.capacity = 2 + static_cast<int>(seed % 3);
    cfg.max_group = std::min(cfg.capacity, 3);
    const Instance inst = generate_instance(cfg, seed);
    if (inst.customer_count() > 7) continue;
    const OracleResult r = exact_cvrp(inst);
    EXPECT_NEAR(r.objective, brute_force_cvrp(inst), 1e-12) << "seed " << seed;
    EXPECT_TRUE(check_feasibility(inst, r.routes).empty());
    EXPECT_NEAR(routes_cost(inst, r.routes), r.objective, 1e-15);
    EXPECT_LE(r.partitions_evaluated, bell(inst.customer_count()));
    for (const auto& route : r.routes) {
      EXPECT_LE(route.nodes[1], route.nodes[route.nodes.size() - 2]);
    }
  }
}

TEST(ExactCvrp, CapacityOneMeansStarRoutes) {
  const Instance inst = planar_instance({{1, 0}, {0, 2}, {3, 0}}, {1, 1, 1}, 1);
  const OracleResult r = exact_cvrp(inst);
  EXPECT_DOUBLE_EQ(r.objective, 12.0);
  EXPECT_EQ(r.routes.size(), 3u);
  EXPECT_EQ(r.partitions_evaluated, 1);
}

TEST(ExactCvrp, Errors) {
  EXPECT_THROW(exact_cvrp(planar_instance({{1, 0}}, {3}, 2)), InfeasibleError);
  GeneratorConfig cfg;
  cfg.demand_mode = DemandMode::unit;
  cfg.request_count = kPartitionMaxCustomers + 1;
  EXPECT_THROW(exact_cvrp(generate_instance(cfg, 0)), SizeError);
}

TEST(Bell, Table) {
  EXPECT_EQ(bell(0), 1);
  EXPECT_EQ(bell(3), 5);
  EXPECT_EQ(bell(5), 52);
}
