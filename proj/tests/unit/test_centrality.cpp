#include <gtest/gtest.h>

#include <deque>
#include <functional>
#include <limits>

#include "ttxai/centrality.hpp"
#include "ttxai/rng.hpp"

using namespace ttxai;

namespace {

constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();

// Hop distance from every vertex to `t`, by BFS over reversed edges.
std::vector<std::size_t> distances_to(const Digraph& g, std::size_t t) {
  std::vector<std::vector<std::size_t>> in(g.size());
  for (std::size_t u = 0; u < g.size(); ++u) {
    for (auto v : g.out[u]) in[v].push_back(u);
  }
  std::vector<std::size_t> d(g.size(), kInf);
  std::deque<std::size_t> q{t};
  d[t] = 0;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop_front();
    for (auto u : in[v]) {
      if (d[u] == kInf) {
        d[u] = d[v] + 1;
        q.push_back(u);
      }
    }
  }
  return d;
}

// Walks every shortest path explicitly, splitting the unit load at each branch.
std::vector<double> brute_force_load(const Digraph& g) {
  std::vector<double> load(g.size(), 0.0);
  for (std::size_t t = 0; t < g.size(); ++t) {
    const auto d = distances_to(g, t);
    for (std::size_t s = 0; s < g.size(); ++s) {
      if (s == t || d[s] == kInf) continue;
      std::function<void(std::size_t, double)> push = [&](std::size_t v, double amount) {
        if (v == t) return;
        if (v != s) load[v] += amount;
        std::vector<std::size_t> next;
        for (auto u : g.out[v]) {
          if (d[u] != kInf && d[u] + 1 == d[v]) next.push_back(u);
        }
        for (auto u : next) push(u, amount / static_cast<double>(next.size()));
      };
      push(s, 1.0);
    }
  }
  return load;
}

Digraph random_graph(Rng& rng, std::size_t n, double p) {
  Digraph g(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (u != v && rng.bernoulli(p)) g.add_edge(u, v);
    }
  }
  return g;
}

}  // namespace

TEST(Centrality, PathGraph) {
  Digraph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  const auto raw = load_centrality_raw(g);
  EXPECT_DOUBLE_EQ(raw[0], 0.0);
  EXPECT_DOUBLE_EQ(raw[1], 1.0);
  EXPECT_DOUBLE_EQ(raw[2], 0.0);
  EXPECT_DOUBLE_EQ(load_centrality_normalized(g)[1], 0.5);
}

TEST(Centrality, DiamondSplitsLoadEqually) {
  // 0 -> {1, 2} -> 3: each middle vertex carries half of the 0->3 unit.
  Digraph g(4);
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  g.add_edge(1, 3);
  g.add_edge(2, 3);
  const auto raw = load_centrality_raw(g);
  EXPECT_DOUBLE_EQ(raw[1], 0.5);
  EXPECT_DOUBLE_EQ(raw[2], 0.5);
}

TEST(Centrality, SelfLoopsAndDuplicatesIgnored) {
  Digraph g(2);
  g.add_edge(0, 0);
  g.add_edge(0, 1);
  g.add_edge(0, 1);
  EXPECT_EQ(g.out[0], (std::vector<std::size_t>{1}));
}

TEST(Centrality, SmallGraphsNormalizeToZero) {
  Digraph g(2);
  g.add_edge(0, 1);
  EXPECT_EQ(load_centrality_normalized(g), (std::vector<double>{0.0, 0.0}));
}

TEST(CentralityProperty, MatchesBruteForceOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    const auto g = random_graph(rng, n, 0.1 + 0.4 * rng.uniform());
    const auto fast = load_centrality_raw(g);
    const auto slow = brute_force_load(g);
    for (std::size_t v = 0; v < n; ++v) EXPECT_NEAR(fast[v], slow[v], 1e-12) << "trial " << trial;
  }
}
