#include "paratransit/instance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "paratransit/errors.hpp"
#include "paratransit/random.hpp"

namespace paratransit {

namespace {

constexpr int kInstanceVersion = 1;
constexpr double kMetricTolerance = 1e-12;

}  // namespace

CostMatrix euclidean_cost_matrix(std::span<const Coordinate> coordinates) {
  if (coordinates.size() < 2) {
    throw std::invalid_argument("euclidean_cost_matrix: need at least 2 coordinates");
  }
  CostMatrix costs(coordinates.size());
  for (std::size_t i = 0; i < coordinates.size(); ++i) {
    for (std::size_t j = i + 1; j < coordinates.size(); ++j) {
      const double dx = coordinates[i].lat - coordinates[j].lat;
      const double dy = coordinates[i].lon - coordinates[j].lon;
      const double d = std::sqrt(dx * dx + dy * dy);
      costs(i, j) = d;
      costs(j, i) = d;
    }
  }
  return costs;
}

int Instance::total_demand() const {
  int sum = 0;
  for (int id = 1; id < depot_end(); ++id) sum += demand(id);
  return sum;
}

Instance make_instance(Coordinate depot, std::span<const CustomerSpec> customers,
                       int capacity, std::uint64_t seed) {
  Instance instance;
  instance.capacity = capacity;
  instance.seed = seed;
  instance.center = depot;
  instance.nodes.push_back({0, depot, 0});
  for (const auto& c : customers) {
    instance.nodes.push_back({static_cast<int>(instance.nodes.size()), c.position, c.demand});
  }
  instance.nodes.push_back({static_cast<int>(instance.nodes.size()), depot, 0});

  std::vector<Coordinate> points;
  points.reserve(instance.nodes.size());
  for (const auto& n : instance.nodes) points.push_back(n.position);
  instance.costs = euclidean_cost_matrix(points);
  return instance;
}

void GeneratorConfig::validate() const {
  if (request_count < 1) throw std::invalid_argument("request_count must be >= 1");
  if (capacity < 1) throw std::invalid_argument("capacity must be >= 1");
  if (!(jitter > 0.0)) throw std::invalid_argument("jitter must be > 0");
  if (demand_mode == DemandMode::grouped) {
    if (max_group < 1) throw std::invalid_argument("max_group must be >= 1");
    if (max_group > capacity) throw std::invalid_argument("max_group must be <= capacity");
  }
}

Instance generate_instance(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);

  std::vector<int> demands;
  if (config.demand_mode == DemandMode::unit) {
    demands.assign(static_cast<std::size_t>(config.request_count), 1);
  } else {
    int remaining = config.request_count;
    while (remaining > 0) {
      const int draw = static_cast<int>(rng.uniform_int(1, config.max_group));
      const int q = std::min(draw, remaining);
      demands.push_back(q);
      remaining -= q;
    }
  }

  std::vector<CustomerSpec> customers;
  customers.reserve(demands.size());
  for (int q : demands) {
    const double lat = rng.uniform(config.center_lat - config.jitter, config.center_lat + config.jitter);
    const double lon = rng.uniform(config.center_lon - config.jitter, config.center_lon + config.jitter);
    customers.push_back({{lat, lon}, q});
  }
  Instance instance = make_instance({config.center_lat, config.center_lon}, customers,
                                    config.capacity, seed);
  return instance;
}

std::vector<std::string> validate_instance(const Instance& instance, bool require_fits_capacity) {
  std::vector<std::string> violations;
  auto report = [&](const std::string& s) { violations.push_back(s); };

  const int count = instance.node_count();
  if (count < 3) {
    report("node count: need depot_start, >= 1 customer and depot_end, got " +
           std::to_string(count) + " nodes");
    return violations;
  }
  if (instance.capacity < 1) {
    report("capacity: Q must be a positive integer, got " + std::to_string(instance.capacity));
  }
  for (int i = 0; i < count; ++i) {
    if (instance.nodes[static_cast<std::size_t>(i)].id != i) {
      report("node ids: node at position " + std::to_string(i) + " has id " +
             std::to_string(instance.nodes[static_cast<std::size_t>(i)].id));
    }
  }
  if (instance.demand(0) != 0) {
    report("depot demand: q_0 must be 0, got " + std::to_string(instance.demand(0)));
  }
  if (instance.demand(instance.depot_end()) != 0) {
    report("depot demand: q_" + std::to_string(instance.depot_end()) + " must be 0, got " +
           std::to_string(instance.demand(instance.depot_end())));
  }
  if (instance.nodes.front().position != instance.nodes.back().position) {
    report("depot position: depot_start (0) and depot_end (" +
           std::to_string(instance.depot_end()) + ") coordinates differ");
  }
  for (int i = 1; i < instance.depot_end(); ++i) {
    const int q = instance.demand(i);
    if (q <= 0) {
      report("customer demand: q_" + std::to_string(i) + " = " + std::to_string(q) + " must be positive");
    } else if (require_fits_capacity && q > instance.capacity) {
      report("customer demand: q_" + std::to_string(i) + " = " + std::to_string(q) +
             " exceeds Q=" + std::to_string(instance.capacity));
    }
  }

  const CostMatrix& c = instance.costs;
  if (c.size() != static_cast<std::size_t>(count)) {
    report("cost matrix: dimension " + std::to_string(c.size()) + " != node count " +
           std::to_string(count));
    return violations;
  }
  const auto n = c.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (c(i, i) != 0.0) report("cost diagonal: C_" + std::to_string(i) + std::to_string(i) + " != 0");
    for (std::size_t j = 0; j < n; ++j) {
      if (!(c(i, j) >= 0.0) || !std::isfinite(c(i, j))) {
        report("cost sign: C_" + std::to_string(i) + "," + std::to_string(j) +
               " is negative or not finite");
      }
      if (j > i && c(i, j) != c(j, i)) {
        report("cost symmetry: C_" + std::to_string(i) + "," + std::to_string(j) + " != C_" +
               std::to_string(j) + "," + std::to_string(i));
      }
    }
  }
  const std::size_t end = n - 1;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == 0 || j == end) continue;
    if (c(0, j) != c(end, j) || c(j, 0) != c(j, end)) {
      report("depot costs: row/column of depot_start and depot_end differ at node " +
             std::to_string(j));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (c(i, k) > c(i, j) + c(j, k) + kMetricTolerance) {
          report("triangle inequality: C_" + std::to_string(i) + "," + std::to_string(k) +
                 " > C_" + std::to_string(i) + "," + std::to_string(j) + " + C_" +
                 std::to_string(j) + "," + std::to_string(k));
        }
      }
    }
  }
  return violations;
}

std::string instance_to_json(const Instance& instance) {
  nlohmann::ordered_json doc;
  doc["version"] = kInstanceVersion;
  doc["seed"] = instance.seed;
  doc["capacity"] = instance.capacity;
  doc["center"] = {{"lat", instance.center.lat}, {"lon", instance.center.lon}};
  auto nodes = nlohmann::ordered_json::array();
  for (int i = 0; i < instance.depot_end(); ++i) {
    const Node& n = instance.nodes[static_cast<std::size_t>(i)];
    nodes.push_back({{"id", n.id}, {"lat", n.position.lat}, {"lon", n.position.lon},
                     {"demand", n.demand}});
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2) + "\n";
}

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError("instance: missing field \"" + std::string(key) + "\"" +
                     (where.empty() ? "" : " in " + where));
  }
  return obj.at(key);
}

double require_number(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) {
    throw ParseError("instance: field \"" + std::string(key) + "\"" +
                     (where.empty() ? "" : " in " + where) + " must be a number");
  }
  return v.get<double>();
}

long long require_integer(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw ParseError("instance: field \"" + std::string(key) + "\"" +
                     (where.empty() ? "" : " in " + where) + " must be an integer");
  }
  return v.get<long long>();
}

}  // namespace

Instance instance_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("instance: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("instance: top-level value must be an object");

  const auto version = require_integer(doc, "version", "");
  if (version != kInstanceVersion) {
    throw ParseError("instance: unsupported version " + std::to_string(version));
  }
  const auto& seed_field = require(doc, "seed", "");
  if (!seed_field.is_number_unsigned() && !(seed_field.is_number_integer() && seed_field.get<long long>() >= 0)) {
    throw ParseError("instance: field \"seed\" must be a non-negative integer");
  }
  const auto capacity = require_integer(doc, "capacity", "");
  const auto& center = require(doc, "center", "");
  const Coordinate center_pos{require_number(center, "lat", "center"),
                              require_number(center, "lon", "center")};
  const auto& nodes = require(doc, "nodes", "");
  if (!nodes.is_array() || nodes.empty()) {
    throw ParseError("instance: field \"nodes\" must be a non-empty array");
  }

  Instance instance;
  instance.capacity = static_cast<int>(capacity);
  instance.seed = seed_field.get<std::uint64_t>();
  instance.center = center_pos;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::string where = "nodes[" + std::to_string(k) + "]";
    const auto& n = nodes[k];
    const auto id = require_integer(n, "id", where);
    if (id != static_cast<long long>(k)) {
      throw ParseError("instance: " + where + ".id is " + std::to_string(id) + ", expected " +
                       std::to_string(k));
    }
    Node node;
    node.id = static_cast<int>(id);
    node.position = {require_number(n, "lat", where), require_number(n, "lon", where)};
    node.demand = static_cast<int>(require_integer(n, "demand", where));
    instance.nodes.push_back(node);
  }
  Node end = instance.nodes.front();
  end.id = static_cast<int>(instance.nodes.size());
  instance.nodes.push_back(end);

  std::vector<Coordinate> points;
  for (const auto& n : instance.nodes) points.push_back(n.position);
  if (points.size() < 2) throw ParseError("instance: need at least one customer node");
  instance.costs = euclidean_cost_matrix(points);

  const auto violations = validate_instance(instance, false);
  if (!violations.empty()) {
    std::string msg = "instance: validation failed:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ParseError(msg);
  }
  return instance;
}

void write_instance(const Instance& instance, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << instance_to_json(instance);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Instance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return instance_from_json(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string to_string(DemandMode mode) {
  return mode == DemandMode::unit ? "unit" : "grouped";
}

DemandMode demand_mode_from_string(const std::string& text) {
  if (text == "unit") return DemandMode::unit;
  if (text == "grouped") return DemandMode::grouped;
  throw std::invalid_argument("unknown demand mode \"" + text + "\" (expected unit|grouped)");
}

}  // namespace paratransit
