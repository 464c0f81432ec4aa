#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace paratransit {

/// A point in coordinate-degree units. Distances are planar Euclidean over
/// (lat, lon), so one unit of cost is one degree.
struct Coordinate {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const Coordinate&, const Coordinate&) = default;
};

struct Node {
  int id = 0;
  Coordinate position;
  int demand = 0;  ///< persons picked up at this node

  friend bool operator==(const Node&, const Node&) = default;
};

/// Dense square matrix of travel costs, row-major.
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}

  std::size_t size() const noexcept { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }

  friend bool operator==(const CostMatrix&, const CostMatrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// C_ij = sqrt((x_i - x_j)^2 + (y_i - y_j)^2). Requires at least two points.
CostMatrix euclidean_cost_matrix(std::span<const Coordinate> coordinates);

/// A routing instance with a doubled depot: node 0 is the start depot, nodes
/// 1..n are customers, node n+1 is the end depot at the start depot's position.
struct Instance {
  std::vector<Node> nodes;
  int capacity = 0;
  std::uint64_t seed = 0;
  Coordinate center;
  CostMatrix costs;

  int node_count() const noexcept { return static_cast<int>(nodes.size()); }
  int customer_count() const noexcept { return node_count() - 2; }
  int depot_start() const noexcept { return 0; }
  int depot_end() const noexcept { return node_count() - 1; }
  bool is_customer(int id) const noexcept { return id >= 1 && id < depot_end(); }
  int demand(int id) const { return nodes[static_cast<std::size_t>(id)].demand; }
  double cost(int i, int j) const {
    return costs(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  int total_demand() const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct CustomerSpec {
  Coordinate position;
  int demand = 1;
};

/// Builds an instance (nodes, doubled depot, cost matrix) from raw parts.
/// Does not validate; call validate_instance on the result.
Instance make_instance(Coordinate depot, std::span<const CustomerSpec> customers,
                       int capacity, std::uint64_t seed = 0);

enum class DemandMode { unit, grouped };

struct GeneratorConfig {
  int request_count = 10;
  int capacity = 10;
  double center_lat = 36.0726;
  double center_lon = -79.7920;
  double jitter = 0.004;  ///< half-width of the sampling square, degrees
  DemandMode demand_mode = DemandMode::grouped;
  int max_group = 4;

  /// Throws std::invalid_argument naming the first broken constraint.
  void validate() const;
};

/// Pure function of (config, seed). Coordinates are uniform in the square
/// center +- jitter; the depot sits at the center.
Instance generate_instance(const GeneratorConfig& config, std::uint64_t seed);

/// Empty iff every structural invariant of the instance and its cost matrix holds.
/// With require_fits_capacity false, q_i > Q is tolerated: such an instance
/// is well formed but infeasible, and solvers report it as such.
std::vector<std::string> validate_instance(const Instance& instance, bool require_fits_capacity = true);

/// JSON document: version, seed, capacity, center {lat, lon},
/// nodes [{id, lat, lon, demand}] with id 0 the depot. The end depot is implicit.
std::string instance_to_json(const Instance& instance);
Instance instance_from_json(const std::string& text);

void write_instance(const Instance& instance, const std::filesystem::path& path);
/// Throws ParseError for malformed documents and for instances that fail
/// validation. Demands above capacity are accepted.
Instance read_instance(const std::filesystem::path& path);

std::string to_string(DemandMode mode);
DemandMode demand_mode_from_string(const std::string& text);

}  // namespace paratransit
