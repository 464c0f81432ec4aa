#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "paratransit/branch_bound.hpp"
#include "paratransit/milp_model.hpp"

namespace paratransit {

/// Column order of every stats row and of the grid CSV.
inline constexpr const char* kStatsCsvHeader =
    "n,Q,nodes_explored,simplex_iterations,run_time_s,objective_cost,gap_percent";

std::string stats_csv_row(const SolveStats& stats);
std::string stats_json(const SolveStats& stats);

struct SolutionFile {
  double objective = 0.0;
  Routes routes;
  std::optional<SolveStats> stats;
  std::string status;  ///< termination reason, or the producing method
};

/// JSON: objective, routes [[node ids]], loads, status and an optional
/// stats block with the table columns plus best_bound.
std::string solution_to_json(const SolutionFile& solution);
SolutionFile solution_from_json(const std::string& text);

void write_solution(const SolutionFile& solution, const std::filesystem::path& path);
SolutionFile read_solution(const std::filesystem::path& path);

}  // namespace paratransit
