#include "paratransit/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "paratransit/errors.hpp"
#include "paratransit/milp_model.hpp"
#include "paratransit/oracle.hpp"
#include "paratransit/random.hpp"
#include "paratransit/solution_io.hpp"

namespace paratransit {

void GridConfig::validate() const {
  if (requests.empty()) throw std::invalid_argument("grid: request list is empty");
  if (capacities.empty()) throw std::invalid_argument("grid: capacity list is empty");
  for (int r : requests)
    if (r < 1) throw std::invalid_argument("grid: request counts must be positive");
  for (int q : capacities)
    if (q < 1) throw std::invalid_argument("grid: capacities must be positive");
  if (!(time_limit_s > 0.0)) throw std::invalid_argument("grid: time limit must be positive");
  if (jobs < 1) throw std::invalid_argument("grid: jobs must be >= 1");
}

std::uint64_t cell_seed(std::uint64_t seed_base, int requests, int capacity) {
  std::uint64_t h = splitmix64(seed_base);
  h = splitmix64(h ^ static_cast<std::uint64_t>(requests));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(capacity) << 32));
  return h;
}

namespace {

GridRow run_cell(const GridConfig& config, int requests, int capacity) {
  GridRow row;
  row.requests = requests;
  row.capacity = capacity;
  row.seed = cell_seed(config.seed_base, requests, capacity);
  try {
    GeneratorConfig gen = config.generator;
    gen.request_count = requests;
    gen.capacity = capacity;
    gen.max_group = std::min(gen.max_group, capacity);
    const Instance instance = generate_instance(gen, row.seed);
    const MilpModel model = build_model(instance);
    SearchParams params;
    params.time_limit_s = config.time_limit_s;
    params.node_limit = config.node_limit;
    const SolveResult result = solve(model, params);
    row.stats = result.stats;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  if (config.verbose) {
    std::cerr << "[grid] n=" << requests << " Q=" << capacity << " "
              << (row.stats ? stats_csv_row(*row.stats) : "error: " + row.error) << "\n";
  }
  return row;
}

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::vector<GridRow> run_scenario_grid(const GridConfig& config) {
  config.validate();
  std::vector<std::pair<int, int>> cells;
  for (int n : config.requests)
    for (int q : config.capacities) cells.emplace_back(n, q);

  std::vector<GridRow> rows(cells.size());
  if (config.jobs == 1) {
    for (std::size_t k = 0; k < cells.size(); ++k) rows[k] = run_cell(config, cells[k].first, cells[k].second);
    return rows;
  }
  // Cells are independent; results land in their fixed slot.
  std::size_t next = 0;
  while (next < cells.size()) {
    std::vector<std::future<GridRow>> wave;
    const std::size_t first = next;
    for (int j = 0; j < config.jobs && next < cells.size(); ++j, ++next) {
      wave.push_back(std::async(std::launch::async, run_cell, std::cref(config), cells[next].first,
                                cells[next].second));
    }
    for (std::size_t k = 0; k < wave.size(); ++k) rows[first + k] = wave[k].get();
  }
  return rows;
}

std::string grid_to_csv(const std::vector<GridRow>& rows) {
  std::string out = std::string(kStatsCsvHeader) + "\n";
  for (const auto& row : rows) {
    if (row.stats) {
      out += stats_csv_row(*row.stats) + "\n";
    } else {
      out += std::to_string(row.requests) + "," + std::to_string(row.capacity) + ",,,,error," +
             sanitize(row.error) + "\n";
    }
  }
  return out;
}

std::vector<GridRow> grid_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kStatsCsvHeader) {
    throw ParseError("grid csv: line 1: expected header \"" + std::string(kStatsCsvHeader) + "\"");
  }
  std::vector<GridRow> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) {
      throw ParseError("grid csv: line " + std::to_string(line_no) + ": expected 7 fields, got " +
                       std::to_string(f.size()));
    }
    GridRow row;
    try {
      row.requests = std::stoi(f[0]);
      row.capacity = std::stoi(f[1]);
      if (f[5] == "error") {
        row.error = f[6];
      } else {
        SolveStats s;
        s.requests = row.requests;
        s.capacity = row.capacity;
        s.nodes_explored = std::stol(f[2]);
        s.simplex_iterations = std::stol(f[3]);
        s.run_time_s = std::stod(f[4]);
        s.objective = std::stod(f[5]);
        s.gap_percent = std::stod(f[6]);
        row.stats = s;
      }
    } catch (const std::logic_error&) {
      throw ParseError("grid csv: line " + std::to_string(line_no) + ": malformed number");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string grid_to_json(const std::vector<GridRow>& rows) {
  auto doc = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["n"] = row.requests;
    r["Q"] = row.capacity;
    r["seed"] = row.seed;
    if (row.stats) {
      r["nodes_explored"] = row.stats->nodes_explored;
      r["simplex_iterations"] = row.stats->simplex_iterations;
      r["run_time_s"] = row.stats->run_time_s;
      r["objective_cost"] = row.stats->objective;
      r["gap_percent"] = row.stats->gap_percent;
      r["best_bound"] = row.stats->best_bound;
      r["termination"] = to_string(row.stats->termination);
    } else {
      r["error"] = row.error;
    }
    doc.push_back(std::move(r));
  }
  return doc.dump(2) + "\n";
}

std::vector<std::filesystem::path> emit_trends(const std::vector<GridRow>& rows,
                                               const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  std::vector<int> request_order, capacity_order;
  for (const auto& r : rows) {
    if (std::find(request_order.begin(), request_order.end(), r.requests) == request_order.end())
      request_order.push_back(r.requests);
    if (std::find(capacity_order.begin(), capacity_order.end(), r.capacity) == capacity_order.end())
      capacity_order.push_back(r.capacity);
  }

  std::vector<std::filesystem::path> written;
  auto write = [&](const std::filesystem::path& path, const std::string& header, auto&& select, auto&& key) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << header << "\n";
    for (const auto& r : rows) {
      if (!select(r) || !r.stats) continue;
      char buf[128];
      std::snprintf(buf, sizeof buf, "%d,%.10g,%.4f\n", key(r), r.stats->objective, r.stats->gap_percent);
      out << buf;
    }
    written.push_back(path);
  };
  for (int n : request_order) {
    write(directory / ("cost_vs_capacity_n" + std::to_string(n) + ".csv"), "Q,objective_cost,gap_percent",
          [n](const GridRow& r) { return r.requests == n; }, [](const GridRow& r) { return r.capacity; });
  }
  for (int q : capacity_order) {
    write(directory / ("cost_vs_requests_Q" + std::to_string(q) + ".csv"), "n,objective_cost,gap_percent",
          [q](const GridRow& r) { return r.capacity == q; }, [](const GridRow& r) { return r.requests; });
  }
  return written;
}

Routes label_instance(const Instance& instance, double time_limit_s) {
  if (instance.customer_count() <= kPartitionMaxCustomers) return exact_cvrp(instance).routes;
  SearchParams params;
  params.time_limit_s = time_limit_s;
  return solve(build_model(instance), params).routes;
}

}  // namespace paratransit
