#include "ttxai/centrality.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace ttxai {

namespace {
constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
}

void Digraph::add_edge(std::size_t u, std::size_t v) {
  if (u == v) return;
  auto& adj = out[u];
  if (std::find(adj.begin(), adj.end(), v) == adj.end()) adj.push_back(v);
}

std::vector<std::size_t> bfs_distances(const Digraph& g, std::size_t source) {
  std::vector<std::size_t> dist(g.size(), kUnreached);
  std::deque<std::size_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (auto v : g.out[u]) {
      if (dist[v] == kUnreached) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

std::vector<double> load_centrality_raw(const Digraph& g) {
  const std::size_t n = g.size();
  Digraph reversed(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (auto v : g.out[u]) reversed.out[v].push_back(u);
  }

  std::vector<double> centrality(n, 0.0);
  std::vector<double> load(n);
  std::vector<std::size_t> order;
  std::vector<std::size_t> next_hops;
  for (std::size_t target = 0; target < n; ++target) {
    // dist[v] = hop distance from v to target.
    const auto dist = bfs_distances(reversed, target);
    order.clear();
    for (std::size_t v = 0; v < n; ++v) {
      if (v != target && dist[v] != kUnreached) order.push_back(v);
    }
    // Farthest first; ties by id keep the summation order fixed.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dist[a] != dist[b] ? dist[a] > dist[b] : a < b;
    });
    std::fill(load.begin(), load.end(), 0.0);
    for (auto v : order) {
      // Load arriving from other sources passes through v.
      centrality[v] += load[v];
      const double total = load[v] + 1.0;
      next_hops.clear();
      for (auto w : g.out[v]) {
        if (dist[w] != kUnreached && dist[w] + 1 == dist[v]) next_hops.push_back(w);
      }
      const double share = total / static_cast<double>(next_hops.size());
      for (auto w : next_hops) load[w] += share;
    }
  }
  return centrality;
}

std::vector<double> load_centrality_normalized(const Digraph& g) {
  const std::size_t n = g.size();
  if (n < 3) return std::vector<double>(n, 0.0);
  auto c = load_centrality_raw(g);
  const double scale = static_cast<double>(n - 1) * static_cast<double>(n - 2);
  for (auto& x : c) x /= scale;
  return c;
}

}  // namespace ttxai
