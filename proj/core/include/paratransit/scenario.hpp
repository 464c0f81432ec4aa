#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "paratransit/branch_bound.hpp"
#include "paratransit/instance.hpp"

namespace paratransit {

/// Requests x capacities experiment grid.
struct GridConfig {
  std::vector<int> requests{10, 15, 20, 30, 40};
  std::vector<int> capacities{10, 15, 20};
  std::uint64_t seed_base = 0;
  double time_limit_s = 30.0;
  std::optional<long> node_limit;
  GeneratorConfig generator;  ///< request_count and capacity are set per cell
  int jobs = 1;               ///< cells solved concurrently
  bool verbose = false;

  void validate() const;
};

struct GridRow {
  int requests = 0;
  int capacity = 0;
  std::uint64_t seed = 0;
  std::optional<SolveStats> stats;
  std::string error;  ///< non-empty when the cell failed
};

/// Stable per-cell seed so cells are independent and reproducible.
std::uint64_t cell_seed(std::uint64_t seed_base, int requests, int capacity);

/// One row per (n, Q) pair, requests-major in list order. A failing cell
/// is recorded with its error and the grid continues.
std::vector<GridRow> run_scenario_grid(const GridConfig& config);

/// Header plus one line per row; failed cells carry "error" in the
/// objective column and the message in the gap column.
std::string grid_to_csv(const std::vector<GridRow>& rows);
std::vector<GridRow> grid_from_csv(const std::string& text);
std::string grid_to_json(const std::vector<GridRow>& rows);

/// Writes cost_vs_capacity_n<n>.csv for every request count and
/// cost_vs_requests_Q<Q>.csv for every capacity. Returns the paths written.
std::vector<std::filesystem::path> emit_trends(const std::vector<GridRow>& rows,
                                               const std::filesystem::path& directory);

/// Optimal routes for a training label: the brute-force oracle when the
/// instance is small enough, branch and bound otherwise.
Routes label_instance(const Instance& instance, double time_limit_s = 30.0);

}  // namespace paratransit
