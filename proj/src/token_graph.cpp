#include "ttxai/keywords.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "ttxai/error.hpp"

namespace ttxai {

std::size_t TokenGraph::total_edge_weight() const {
  std::size_t total = 0;
  for (const auto& [_, w] : edges) total += w;
  return total;
}

std::vector<std::string> surviving_tokens(const TokenizedNote& note,
                                          std::size_t min_token_length) {
  std::vector<std::string> out;
  out.reserve(note.tokens.size());
  for (const auto& t : note.tokens) {
    if (utf8_length(t) >= min_token_length) out.push_back(t);
  }
  return out;
}

TokenGraph build_token_graph(const TokenizedNote& note, std::size_t min_token_length) {
  if (note.tokens.empty()) throw ValidationError("build_token_graph: note has no tokens");
  const auto tokens = surviving_tokens(note, min_token_length);
  if (tokens.empty()) {
    throw ValidationError("build_token_graph: no token of note " + note.note_id +
                          " survives the length filter");
  }
  TokenGraph g;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    ++g.node_freq[tokens[i]];
    if (i + 1 < tokens.size()) ++g.edges[{tokens[i], tokens[i + 1]}];
  }
  return g;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto x = to_u32(a);
  const auto y = to_u32(b);
  std::vector<std::size_t> row(y.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (x[i - 1] == y[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[y.size()];
}

namespace {

// ceil(len * (threshold - 1)); the epsilon absorbs the representation error
// of thresholds like 1.1 so that 10 * 0.1 budgets 1, not 2.
std::size_t merge_budget(std::size_t len, double threshold) {
  const double raw = static_cast<double>(len) * (threshold - 1.0);
  return static_cast<std::size_t>(std::max(0.0, std::ceil(raw - 1e-9)));
}

bool within_budget(const std::string& u, const std::string& v, double threshold) {
  const std::size_t lu = utf8_length(u);
  const std::size_t lv = utf8_length(v);
  const std::size_t budget = merge_budget(std::max(lu, lv), threshold);
  if (budget == 0) return false;
  const std::size_t diff = lu > lv ? lu - lv : lv - lu;
  if (diff > budget) return false;
  return levenshtein(u, v) <= budget;
}

}  // namespace

MergeResult merge_meta_vertices(const TokenGraph& graph, double merge_threshold) {
  if (!(merge_threshold >= 1.0)) {
    throw ValidationError("merge_meta_vertices: merge_threshold must be >= 1.0");
  }
  std::vector<std::string> names;
  std::vector<std::size_t> freq;
  for (const auto& [name, f] : graph.node_freq) {
    names.push_back(name);
    freq.push_back(f);
  }
  const std::size_t n = names.size();

  struct Pair {
    std::size_t combined;
    std::size_t a, b;
  };
  std::vector<Pair> candidates;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (within_budget(names[a], names[b], merge_threshold)) {
        candidates.push_back({freq[a] + freq[b], a, b});
      }
    }
  }
  // names is sorted, so (a, b) order is lexicographic.
  std::sort(candidates.begin(), candidates.end(), [](const Pair& p, const Pair& q) {
    return std::tie(q.combined, p.a, p.b) < std::tie(p.combined, q.a, q.b);
  });

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::size_t> merged_freq = freq;
  for (const auto& p : candidates) {
    const std::size_t ra = find(p.a);
    const std::size_t rb = find(p.b);
    if (ra == rb) continue;
    if ((ra != p.a || rb != p.b) && !within_budget(names[ra], names[rb], merge_threshold)) {
      continue;
    }
    std::size_t survivor = ra;
    std::size_t absorbed = rb;
    if (merged_freq[rb] > merged_freq[ra] ||
        (merged_freq[rb] == merged_freq[ra] && names[rb] < names[ra])) {
      std::swap(survivor, absorbed);
    }
    parent[absorbed] = survivor;
    merged_freq[survivor] += merged_freq[absorbed];
  }

  MergeResult result;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[names[i]] = i;
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = find(i);
    result.graph.node_freq[names[root]] += freq[i];
    if (root != i) result.merge_map[names[i]] = names[root];
  }
  for (const auto& [edge, w] : graph.edges) {
    const auto ru = find(index.at(edge.first));
    const auto rv = find(index.at(edge.second));
    if (ru == rv && edge.first != edge.second) {
      result.dropped_self_loop_weight += w;
      continue;
    }
    result.graph.edges[{names[ru], names[rv]}] += w;
  }
  return result;
}

}  // namespace ttxai
