#pragma once

#include <chrono>
#include <optional>
#include <vector>

#include "paratransit/milp_model.hpp"

namespace paratransit {

/// min c'x  s.t.  rows,  lower <= x <= upper (finite bounds).
struct LpProblem {
  std::vector<double> objective;
  std::vector<LinearRow> rows;
  std::vector<double> lower;
  std::vector<double> upper;
  /// Set by relax() when a fixing empties a variable's range.
  bool trivially_infeasible = false;

  int num_vars() const noexcept { return static_cast<int>(objective.size()); }
};

enum class LpStatus { optimal, infeasible, iteration_limit, time_limit };

const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> values;
  long iterations = 0;  ///< pivots plus bound flips, both phases
};

struct LpOptions {
  long max_iterations = 1'000'000;
  std::optional<std::chrono::steady_clock::time_point> deadline;
  /// Consecutive non-improving pivots before switching to Bland's rule.
  int bland_after = 1000;
  /// Basis re-inversion period.
  int refactor_every = 64;
  bool verbose = false;
};

struct BoundFixing {
  int var = 0;
  double lower = 0.0;
  double upper = 1.0;
};

/// LP relaxation of the model: binaries become [0, 1] intersected with the
/// fixings. Fixings may only tighten arc variables.
LpProblem relax(const MilpModel& model, const std::vector<BoundFixing>& fixings = {});

/// Bounded-variable primal simplex (phase 1 with artificials, then phase 2)
/// on a dense explicit basis inverse. Deterministic for identical input.
///
/// Tolerances: pivot 1e-9, primal feasibility 1e-7, reduced cost 1e-9.
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options = {});

}  // namespace paratransit
