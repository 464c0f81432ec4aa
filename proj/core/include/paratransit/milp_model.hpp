#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paratransit/instance.hpp"

namespace paratransit {

enum class Sense { less_equal, equal, greater_equal };

/// Origin of a model row, kept for diagnostics and tests.
enum class RowTag {
  degree,    ///< each customer is left exactly once
  flow,      ///< inflow equals outflow at each customer
  mtz,       ///< load propagation along an arc; forbids subtours and overloads
  vehicles,  ///< optional bounds on the number of routes
};

struct LinearTerm {
  int var = 0;
  double coef = 0.0;
};

struct LinearRow {
  std::vector<LinearTerm> terms;
  Sense sense = Sense::equal;
  double rhs = 0.0;
  RowTag tag = RowTag::degree;
};

struct Arc {
  int from = 0;
  int to = 0;
  friend bool operator==(const Arc&, const Arc&) = default;
  friend auto operator<=>(const Arc&, const Arc&) = default;
};

struct ModelOptions {
  std::optional<int> min_vehicles;
  std::optional<int> max_vehicles;
};

/// One vehicle route: depot_start, customers..., depot_end.
struct Route {
  std::vector<int> nodes;
  int load = 0;
  friend bool operator==(const Route&, const Route&) = default;
};

using Routes = std::vector<Route>;

/// Sum of C_ij over consecutive node pairs of every route.
double routes_cost(const Instance& instance, const Routes& routes);

/// Recomputes per-route loads from the instance demands.
void fill_loads(const Instance& instance, Routes& routes);

/// The routing MILP. Columns are laid out as all arc variables x_ij
/// (binary, in lexicographic (from, to) order) followed by load variables
/// y_i for depot_start and every customer.
///
/// Arcs into depot_start, out of depot_end and the empty trip
/// depot_start -> depot_end are not admissible and have no column.
class MilpModel {
 public:
  static constexpr double kIntegralityTolerance = 1e-6;
  static constexpr double kFeasibilityTolerance = 1e-7;

  const Instance& instance() const noexcept { return instance_; }
  const ModelOptions& options() const noexcept { return options_; }

  int num_vars() const noexcept { return static_cast<int>(objective_.size()); }
  int num_arc_vars() const noexcept { return static_cast<int>(arcs_.size()); }
  int num_load_vars() const noexcept { return num_vars() - num_arc_vars(); }

  const std::vector<Arc>& arcs() const noexcept { return arcs_; }
  const Arc& arc(int var) const { return arcs_[static_cast<std::size_t>(var)]; }
  bool is_arc_var(int var) const noexcept { return var >= 0 && var < num_arc_vars(); }

  /// Column of x_ij, or -1 when (i, j) is not admissible.
  int arc_var(int from, int to) const;
  /// Column of y_i, or -1 for depot_end.
  int load_var(int node) const;

  const std::vector<double>& objective() const noexcept { return objective_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  const std::vector<LinearRow>& rows() const noexcept { return rows_; }

  std::string var_name(int var) const;

 private:
  friend MilpModel build_model(const Instance& instance, const ModelOptions& options);

  Instance instance_;
  ModelOptions options_;
  std::vector<Arc> arcs_;
  std::vector<int> arc_index_;  // node_count^2 lookup, -1 when not admissible
  std::vector<int> load_index_;
  std::vector<double> objective_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<LinearRow> rows_;
};

/// Throws InfeasibleError when a customer demand exceeds capacity, and
/// std::invalid_argument for structurally invalid instances.
MilpModel build_model(const Instance& instance, const ModelOptions& options = {});

/// Sum of c_ij * x_ij. The assignment is indexed by column; a short vector
/// throws std::invalid_argument naming the first missing variable.
double evaluate_objective(const MilpModel& model, std::span<const double> assignment);

/// Decodes an integral point into depot-to-depot routes. Throws
/// std::invalid_argument for fractional points, for nodes left or entered
/// more than once, and for customer cycles detached from the depot.
Routes assignment_to_routes(const MilpModel& model, std::span<const double> assignment);

/// Inverse of assignment_to_routes; loads y_i are set to the cumulative load.
std::vector<double> routes_to_assignment(const MilpModel& model, const Routes& routes);

/// Empty iff the routes visit every customer once, start and end at the
/// depot, and respect capacity. Each entry starts with the constraint family
/// it breaks: "degree", "flow" or "capacity".
std::vector<std::string> check_feasibility(const Instance& instance, const Routes& routes);

}  // namespace paratransit
