#include "paratransit/solution_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "paratransit/errors.hpp"

namespace paratransit {

namespace {

nlohmann::ordered_json stats_to_object(const SolveStats& s) {
  return {{"n", s.requests},
          {"Q", s.capacity},
          {"nodes_explored", s.nodes_explored},
          {"simplex_iterations", s.simplex_iterations},
          {"run_time_s", s.run_time_s},
          {"objective_cost", s.objective},
          {"gap_percent", s.gap_percent},
          {"best_bound", s.best_bound},
          {"root_bound", s.root_bound},
          {"termination", to_string(s.termination)}};
}

Termination termination_from_string(const std::string& s) {
  if (s == "optimal") return Termination::optimal;
  if (s == "time-limit") return Termination::time_limit;
  if (s == "node-limit") return Termination::node_limit;
  if (s == "gap-target") return Termination::gap_target;
  throw ParseError("solution: unknown termination \"" + s + "\"");
}

}  // namespace

std::string stats_csv_row(const SolveStats& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%d,%ld,%ld,%.2f,%.10g,%.4f", s.requests, s.capacity,
                s.nodes_explored, s.simplex_iterations, s.run_time_s, s.objective, s.gap_percent);
  return buf;
}

std::string stats_json(const SolveStats& stats) { return stats_to_object(stats).dump(); }

std::string solution_to_json(const SolutionFile& solution) {
  nlohmann::ordered_json doc;
  doc["objective"] = solution.objective;
  doc["status"] = solution.status;
  auto routes = nlohmann::ordered_json::array();
  auto loads = nlohmann::ordered_json::array();
  for (const auto& r : solution.routes) {
    routes.push_back(r.nodes);
    loads.push_back(r.load);
  }
  doc["routes"] = std::move(routes);
  doc["loads"] = std::move(loads);
  if (solution.stats) doc["stats"] = stats_to_object(*solution.stats);
  return doc.dump(2) + "\n";
}

SolutionFile solution_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("solution: malformed JSON: ") + e.what());
  }
  try {
    SolutionFile out;
    out.objective = doc.at("objective").get<double>();
    out.status = doc.value("status", std::string{});
    const auto& routes = doc.at("routes");
    const auto& loads = doc.at("loads");
    if (routes.size() != loads.size()) throw ParseError("solution: routes and loads differ in length");
    for (std::size_t k = 0; k < routes.size(); ++k) {
      out.routes.push_back({routes[k].get<std::vector<int>>(), loads[k].get<int>()});
    }
    if (doc.contains("stats")) {
      const auto& s = doc.at("stats");
      SolveStats st;
      st.requests = s.at("n").get<int>();
      st.capacity = s.at("Q").get<int>();
      st.nodes_explored = s.at("nodes_explored").get<long>();
      st.simplex_iterations = s.at("simplex_iterations").get<long>();
      st.run_time_s = s.at("run_time_s").get<double>();
      st.objective = s.at("objective_cost").get<double>();
      st.gap_percent = s.at("gap_percent").get<double>();
      st.best_bound = s.value("best_bound", st.objective);
      st.root_bound = s.value("root_bound", 0.0);
      st.termination = termination_from_string(s.value("termination", std::string{"optimal"}));
      out.stats = st;
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("solution: ") + e.what());
  }
}

void write_solution(const SolutionFile& solution, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << solution_to_json(solution);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

SolutionFile read_solution(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return solution_from_json(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace paratransit
