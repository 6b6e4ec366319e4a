#pragma once

#include <cstddef>
#include <vector>

namespace ttxai {

/// Unweighted directed graph over dense vertex ids [0, n).
struct Digraph {
  std::vector<std::vector<std::size_t>> out;

  explicit Digraph(std::size_t n = 0) : out(n) {}
  std::size_t size() const { return out.size(); }
  /// Adds u->v unless it is a self-loop or already present.
  void add_edge(std::size_t u, std::size_t v);
};

/// Hop distances from `source`; unreachable vertices get SIZE_MAX.
std::vector<std::size_t> bfs_distances(const Digraph& g, std::size_t source);

/// Raw (unnormalized) load centrality.
///
/// For every ordered pair (s, t), s != t, t reachable from s, one unit of load
/// leaves s and travels along shortest (hop-count) paths toward t. At each
/// vertex the load it holds is split equally among the out-neighbours that are
/// one hop closer to t. A vertex's centrality is the total load passing
/// through it as an interior vertex (load it originates or absorbs is not
/// counted).
///
/// Runs one reverse BFS per target and pushes the load of all sources at once
/// in decreasing distance order: O(n * m).
std::vector<double> load_centrality_raw(const Digraph& g);

/// Raw load divided by (n-1)(n-2); all zeros when n < 3.
std::vector<double> load_centrality_normalized(const Digraph& g);

}  // namespace ttxai
