#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "paratransit/gcn.hpp"

namespace paratransit::gcn {

namespace {

struct Partial {
  std::vector<int> sequence;  // instance node ids; 0 marks a depot visit
  std::vector<char> visited;
  int current = 0;            // graph node
  int load = 0;
  int remaining = 0;
  double score = 0.0;         // sum of log-probabilities
  double cost = 0.0;
};

double log_prob(const Matrix& heatmap, int a, int b) {
  return std::log(std::max(heatmap(a, b), 1e-12));
}

// Higher score first, then cheaper, then lexicographically smaller sequence.
bool ranks_before(const Partial& a, const Partial& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.cost != b.cost) return a.cost < b.cost;
  return a.sequence < b.sequence;
}

}  // namespace

Routes decode_routes(const Matrix& heatmap, const Instance& instance, int beam_width) {
  if (beam_width < 1) throw std::invalid_argument("decode_routes: beam_width must be >= 1");
  const int n = instance.customer_count();
  if (heatmap.rows() != n + 1 || heatmap.cols() != n + 1) {
    throw std::invalid_argument("decode_routes: heatmap must be " + std::to_string(n + 1) + "x" +
                                std::to_string(n + 1));
  }
  for (int i = 1; i <= n; ++i) {
    if (instance.demand(i) > instance.capacity) {
      throw std::invalid_argument("decode_routes: customer " + std::to_string(i) + " exceeds capacity");
    }
  }

  Partial root;
  root.sequence.push_back(0);
  root.visited.assign(static_cast<std::size_t>(n + 1), 0);
  root.remaining = n;
  std::vector<Partial> beam{root};

  for (int placed = 0; placed < n; ++placed) {
    std::vector<Partial> children;
    for (const auto& state : beam) {
      Partial base = state;
      bool fits = false;
      for (int j = 1; j <= n && !fits; ++j) {
        fits = !base.visited[static_cast<std::size_t>(j)] && base.load + instance.demand(j) <= instance.capacity;
      }
      if (!fits) {
        // close the route and start a new one at the depot
        base.score += log_prob(heatmap, base.current, 0);
        base.cost += instance.cost(base.current, 0);
        base.current = 0;
        base.load = 0;
        base.sequence.push_back(0);
      }
      for (int j = 1; j <= n; ++j) {
        if (base.visited[static_cast<std::size_t>(j)] || base.load + instance.demand(j) > instance.capacity) continue;
        Partial child = base;
        child.score += log_prob(heatmap, base.current, j);
        child.cost += instance.cost(base.current, j);
        child.visited[static_cast<std::size_t>(j)] = 1;
        child.load += instance.demand(j);
        child.current = j;
        --child.remaining;
        child.sequence.push_back(j);
        children.push_back(std::move(child));
      }
    }
    const auto keep = std::min<std::size_t>(children.size(), static_cast<std::size_t>(beam_width));
    std::partial_sort(children.begin(), children.begin() + static_cast<long>(keep), children.end(), ranks_before);
    children.resize(keep);
    beam = std::move(children);
  }

  for (auto& state : beam) {
    state.score += log_prob(heatmap, state.current, 0);
    state.cost += instance.cost(state.current, 0);
    state.sequence.push_back(0);
  }
  const Partial& best = *std::min_element(beam.begin(), beam.end(), [](const Partial& a, const Partial& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return ranks_before(a, b);
  });

  Routes routes;
  Route current;
  for (std::size_t k = 0; k < best.sequence.size(); ++k) {
    const int id = best.sequence[k];
    if (id == 0) {
      if (!current.nodes.empty()) {
        current.nodes.push_back(instance.depot_end());
        routes.push_back(std::move(current));
        current = Route{};
      }
      if (k + 1 < best.sequence.size()) current.nodes.push_back(instance.depot_start());
    } else {
      current.nodes.push_back(id);
      current.load += instance.demand(id);
    }
  }
  return routes;
}

}  // namespace paratransit::gcn
