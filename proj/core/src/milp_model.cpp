#include "paratransit/milp_model.hpp"

#include <cmath>
#include <stdexcept>

#include "paratransit/errors.hpp"

namespace paratransit {

double routes_cost(const Instance& instance, const Routes& routes) {
  double total = 0.0;
  for (const auto& r : routes) {
    for (std::size_t k = 1; k < r.nodes.size(); ++k) total += instance.cost(r.nodes[k - 1], r.nodes[k]);
  }
  return total;
}

void fill_loads(const Instance& instance, Routes& routes) {
  for (auto& r : routes) {
    r.load = 0;
    for (int id : r.nodes) {
      if (instance.is_customer(id)) r.load += instance.demand(id);
    }
  }
}

int MilpModel::arc_var(int from, int to) const {
  const int n = instance_.node_count();
  if (from < 0 || to < 0 || from >= n || to >= n) return -1;
  return arc_index_[static_cast<std::size_t>(from * n + to)];
}

int MilpModel::load_var(int node) const {
  if (node < 0 || node >= static_cast<int>(load_index_.size())) return -1;
  return load_index_[static_cast<std::size_t>(node)];
}

std::string MilpModel::var_name(int var) const {
  if (is_arc_var(var)) {
    const Arc& a = arc(var);
    return "x_" + std::to_string(a.from) + "_" + std::to_string(a.to);
  }
  for (std::size_t i = 0; i < load_index_.size(); ++i) {
    if (load_index_[i] == var) return "y_" + std::to_string(i);
  }
  return "var_" + std::to_string(var);
}

MilpModel build_model(const Instance& instance, const ModelOptions& options) {
  for (int i = 1; i < instance.depot_end(); ++i) {
    if (instance.demand(i) > instance.capacity) {
      throw InfeasibleError("customer " + std::to_string(i) + " demand " +
                            std::to_string(instance.demand(i)) + " exceeds capacity " +
                            std::to_string(instance.capacity));
    }
  }
  if (const auto v = validate_instance(instance); !v.empty()) {
    throw std::invalid_argument("build_model: invalid instance: " + v.front());
  }

  MilpModel m;
  m.instance_ = instance;
  m.options_ = options;

  const int n = instance.node_count();
  const int start = instance.depot_start();
  const int end = instance.depot_end();
  const double capacity = instance.capacity;

  m.arc_index_.assign(static_cast<std::size_t>(n * n), -1);
  for (int i = 0; i < n; ++i) {
    if (i == end) continue;
    for (int j = 0; j < n; ++j) {
      if (j == i || j == start) continue;
      if (i == start && j == end) continue;
      m.arc_index_[static_cast<std::size_t>(i * n + j)] = static_cast<int>(m.arcs_.size());
      m.arcs_.push_back({i, j});
    }
  }
  for (const Arc& a : m.arcs_) {
    m.objective_.push_back(instance.cost(a.from, a.to));
    m.lower_.push_back(0.0);
    m.upper_.push_back(1.0);
  }

  m.load_index_.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < end; ++i) {
    m.load_index_[static_cast<std::size_t>(i)] = static_cast<int>(m.objective_.size());
    m.objective_.push_back(0.0);
    m.lower_.push_back(static_cast<double>(instance.demand(i)));
    m.upper_.push_back(capacity);
  }

  // Every customer is left exactly once.
  for (int i = 1; i < end; ++i) {
    LinearRow row{{}, Sense::equal, 1.0, RowTag::degree};
    for (int j = 0; j < n; ++j) {
      if (const int v = m.arc_var(i, j); v >= 0) row.terms.push_back({v, 1.0});
    }
    m.rows_.push_back(std::move(row));
  }
  // Inflow equals outflow at each customer.
  for (int h = 1; h < end; ++h) {
    LinearRow row{{}, Sense::equal, 0.0, RowTag::flow};
    for (int i = 0; i < n; ++i) {
      if (const int v = m.arc_var(i, h); v >= 0) row.terms.push_back({v, 1.0});
    }
    for (int j = 0; j < n; ++j) {
      if (const int v = m.arc_var(h, j); v >= 0) row.terms.push_back({v, -1.0});
    }
    m.rows_.push_back(std::move(row));
  }
  // y_j >= y_i + q_j x_ij - Q (1 - x_ij), rearranged as
  // y_j - y_i - (q_j + Q) x_ij >= -Q.
  for (const Arc& a : m.arcs_) {
    if (!instance.is_customer(a.to)) continue;
    const double qj = instance.demand(a.to);
    LinearRow row{{}, Sense::greater_equal, -capacity, RowTag::mtz};
    row.terms.push_back({m.load_var(a.to), 1.0});
    row.terms.push_back({m.load_var(a.from), -1.0});
    row.terms.push_back({m.arc_var(a.from, a.to), -(qj + capacity)});
    m.rows_.push_back(std::move(row));
  }

  auto depot_out = [&](Sense sense, double rhs) {
    LinearRow row{{}, sense, rhs, RowTag::vehicles};
    for (int j = 1; j < end; ++j) row.terms.push_back({m.arc_var(start, j), 1.0});
    m.rows_.push_back(std::move(row));
  };
  if (options.min_vehicles) depot_out(Sense::greater_equal, *options.min_vehicles);
  if (options.max_vehicles) depot_out(Sense::less_equal, *options.max_vehicles);
  return m;
}

double evaluate_objective(const MilpModel& model, std::span<const double> assignment) {
  if (assignment.size() < static_cast<std::size_t>(model.num_arc_vars())) {
    throw std::invalid_argument("evaluate_objective: assignment is missing variable " +
                                model.var_name(static_cast<int>(assignment.size())));
  }
  double total = 0.0;
  for (int v = 0; v < model.num_arc_vars(); ++v) {
    total += model.objective()[static_cast<std::size_t>(v)] * assignment[static_cast<std::size_t>(v)];
  }
  return total;
}

Routes assignment_to_routes(const MilpModel& model, std::span<const double> assignment) {
  if (assignment.size() < static_cast<std::size_t>(model.num_arc_vars())) {
    throw std::invalid_argument("assignment_to_routes: assignment is missing variable " +
                                model.var_name(static_cast<int>(assignment.size())));
  }
  const Instance& inst = model.instance();
  const int n = inst.node_count();
  const int end = inst.depot_end();

  std::vector<int> successor(static_cast<std::size_t>(n), -1);
  std::vector<int> in_degree(static_cast<std::size_t>(n), 0);
  std::vector<int> out_degree(static_cast<std::size_t>(n), 0);
  std::vector<int> first_hops;
  for (int v = 0; v < model.num_arc_vars(); ++v) {
    const double x = assignment[static_cast<std::size_t>(v)];
    const double rounded = std::round(x);
    if (std::abs(x - rounded) > MilpModel::kIntegralityTolerance || (rounded != 0.0 && rounded != 1.0)) {
      throw std::invalid_argument("assignment_to_routes: " + model.var_name(v) + " = " +
                                  std::to_string(x) + " is not integral");
    }
    if (rounded == 0.0) continue;
    const Arc& a = model.arc(v);
    ++out_degree[static_cast<std::size_t>(a.from)];
    ++in_degree[static_cast<std::size_t>(a.to)];
    if (a.from == inst.depot_start()) {
      first_hops.push_back(a.to);
    } else {
      successor[static_cast<std::size_t>(a.from)] = a.to;
    }
  }
  for (int i = 1; i < end; ++i) {
    if (out_degree[static_cast<std::size_t>(i)] > 1 || in_degree[static_cast<std::size_t>(i)] > 1) {
      throw std::invalid_argument("assignment_to_routes: node " + std::to_string(i) +
                                  " visited more than once");
    }
    if (out_degree[static_cast<std::size_t>(i)] == 0 || in_degree[static_cast<std::size_t>(i)] == 0) {
      throw std::invalid_argument("assignment_to_routes: node " + std::to_string(i) +
                                  " is not visited");
    }
  }

  Routes routes;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int first : first_hops) {
    Route r;
    r.nodes.push_back(inst.depot_start());
    int cur = first;
    while (cur != end) {
      if (seen[static_cast<std::size_t>(cur)]) {
        throw std::invalid_argument("assignment_to_routes: node " + std::to_string(cur) +
                                    " visited more than once");
      }
      seen[static_cast<std::size_t>(cur)] = 1;
      r.nodes.push_back(cur);
      r.load += inst.demand(cur);
      cur = successor[static_cast<std::size_t>(cur)];
      if (cur < 0) throw std::invalid_argument("assignment_to_routes: route breaks off");
    }
    r.nodes.push_back(end);
    routes.push_back(std::move(r));
  }
  for (int i = 1; i < end; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) {
      throw std::invalid_argument("assignment_to_routes: subtour through node " + std::to_string(i) +
                                  " does not reach the depot");
    }
  }
  return routes;
}

std::vector<double> routes_to_assignment(const MilpModel& model, const Routes& routes) {
  std::vector<double> x(static_cast<std::size_t>(model.num_vars()), 0.0);
  const Instance& inst = model.instance();
  for (int i = 0; i < inst.depot_end(); ++i) {
    x[static_cast<std::size_t>(model.load_var(i))] = inst.demand(i);
  }
  for (const auto& r : routes) {
    int load = 0;
    for (std::size_t k = 1; k < r.nodes.size(); ++k) {
      const int v = model.arc_var(r.nodes[k - 1], r.nodes[k]);
      if (v < 0) {
        throw std::invalid_argument("routes_to_assignment: arc " + std::to_string(r.nodes[k - 1]) +
                                    "->" + std::to_string(r.nodes[k]) + " is not admissible");
      }
      x[static_cast<std::size_t>(v)] = 1.0;
      if (inst.is_customer(r.nodes[k])) {
        load += inst.demand(r.nodes[k]);
        x[static_cast<std::size_t>(model.load_var(r.nodes[k]))] = load;
      }
    }
  }
  return x;
}

std::vector<std::string> check_feasibility(const Instance& instance, const Routes& routes) {
  std::vector<std::string> violations;
  const int end = instance.depot_end();
  std::vector<int> visits(static_cast<std::size_t>(instance.node_count()), 0);

  for (std::size_t r = 0; r < routes.size(); ++r) {
    const auto& nodes = routes[r].nodes;
    const std::string tag = "route " + std::to_string(r);
    if (nodes.size() < 3 || nodes.front() != instance.depot_start() || nodes.back() != end) {
      violations.push_back("flow: " + tag +
                           " must start at depot_start, visit >= 1 customer and end at depot_end");
    }
    int load = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const int id = nodes[k];
      if (id < 0 || id > end) {
        violations.push_back("flow: " + tag + " references unknown node " + std::to_string(id));
        continue;
      }
      const bool boundary = (k == 0 || k + 1 == nodes.size());
      if (!boundary && !instance.is_customer(id)) {
        violations.push_back("flow: " + tag + " passes through depot node " + std::to_string(id) +
                             " mid-route");
        continue;
      }
      if (instance.is_customer(id)) {
        ++visits[static_cast<std::size_t>(id)];
        load += instance.demand(id);
      }
    }
    if (load > instance.capacity) {
      violations.push_back("capacity: " + tag + " load " + std::to_string(load) +
                           " exceeds Q = " + std::to_string(instance.capacity));
    }
  }
  for (int i = 1; i < end; ++i) {
    const int v = visits[static_cast<std::size_t>(i)];
    if (v == 0) violations.push_back("degree: customer " + std::to_string(i) + " is not visited");
    if (v > 1) {
      violations.push_back("degree: customer " + std::to_string(i) + " visited " + std::to_string(v) +
                           " times");
    }
  }
  return violations;
}

}  // namespace paratransit
