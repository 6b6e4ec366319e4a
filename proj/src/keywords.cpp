#include "ttxai/keywords.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "ttxai/centrality.hpp"
#include "ttxai/error.hpp"

namespace ttxai {

void RakunConfig::validate() const {
  if (max_candidates == 0) throw ValidationError("rakun: max_candidates must be >= 1");
  if (retain_top > max_candidates) {
    throw ValidationError("rakun: retain_top must not exceed max_candidates");
  }
  if (!(merge_threshold >= 1.0)) throw ValidationError("rakun: merge_threshold must be >= 1.0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("rakun: alpha must be in [0,1]");
  if (max_phrase_len < 1 || max_phrase_len > 3) {
    throw ValidationError("rakun: max_phrase_len must be 1, 2 or 3");
  }
  if (!(phrase_pool_fraction > 0.0 && phrase_pool_fraction <= 1.0)) {
    throw ValidationError("rakun: phrase_pool_fraction must be in (0,1]");
  }
}

std::map<std::string, double> load_centrality(const TokenGraph& graph) {
  std::map<std::string, std::size_t> index;
  std::vector<const std::string*> names;
  for (const auto& [name, _] : graph.node_freq) {
    index.emplace(name, names.size());
    names.push_back(&name);
  }
  Digraph g(names.size());
  for (const auto& [edge, _] : graph.edges) g.add_edge(index.at(edge.first), index.at(edge.second));
  const auto values = load_centrality_normalized(g);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < names.size(); ++i) out.emplace(*names[i], values[i]);
  return out;
}

std::map<std::string, double> score_tokens(const TokenGraph& graph,
                                           const std::map<std::string, double>& centrality,
                                           double alpha) {
  double max_freq = 0.0;
  double max_cent = 0.0;
  for (const auto& [name, f] : graph.node_freq) {
    const auto it = centrality.find(name);
    if (it == centrality.end()) {
      throw ValidationError("score_tokens: no centrality for node '" + name + "'");
    }
    max_freq = std::max(max_freq, static_cast<double>(f));
    max_cent = std::max(max_cent, it->second);
  }
  std::map<std::string, double> scores;
  for (const auto& [name, f] : graph.node_freq) {
    const double fn = max_freq > 0.0 ? static_cast<double>(f) / max_freq : 0.0;
    const double cn = max_cent > 0.0 ? centrality.at(name) / max_cent : 0.0;
    scores.emplace(name, alpha * fn + (1.0 - alpha) * cn);
  }
  return scores;
}

namespace {

struct Ranked {
  Keyphrase phrase;
  std::size_t first = 0;
};

bool ranks_before(const Ranked& a, const Ranked& b) {
  if (a.phrase.score != b.phrase.score) return a.phrase.score > b.phrase.score;
  if (a.first != b.first) return a.first < b.first;
  return a.phrase.surface < b.phrase.surface;
}

}  // namespace

std::vector<Keyphrase> form_keyphrases(const TokenizedNote& note,
                                       const std::map<std::string, double>& scores,
                                       const std::map<std::string, std::string>& merge_map,
                                       const RakunConfig& config) {
  if (scores.empty()) throw ValidationError("form_keyphrases: empty score map");
  auto seq = surviving_tokens(note, config.min_token_length);
  for (auto& t : seq) {
    if (auto it = merge_map.find(t); it != merge_map.end()) t = it->second;
  }
  std::map<std::string, std::size_t> first;
  for (std::size_t i = 0; i < seq.size(); ++i) first.emplace(seq[i], i);
  auto first_of = [&](const std::string& t) {
    const auto it = first.find(t);
    return it == first.end() ? seq.size() : it->second;
  };

  std::vector<Ranked> unigrams;
  for (const auto& [token, score] : scores) {
    unigrams.push_back({{token, 1, score, {score}}, first_of(token)});
  }
  std::sort(unigrams.begin(), unigrams.end(), ranks_before);

  const double raw_pool = config.phrase_pool_fraction * static_cast<double>(scores.size());
  const auto pool_size = std::min<std::size_t>(
      scores.size(), static_cast<std::size_t>(std::ceil(raw_pool - 1e-9)));
  std::set<std::string> pool;
  for (std::size_t i = 0; i < pool_size; ++i) pool.insert(unigrams[i].phrase.surface);

  std::vector<Ranked> ranked = unigrams;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!pool.count(seq[i])) continue;
    for (std::size_t len = 2; len <= config.max_phrase_len && i + len <= seq.size(); ++len) {
      // Windows grow one token at a time, so only the new member needs a check.
      if (!pool.count(seq[i + len - 1])) break;
      std::vector<std::string> members(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                       seq.begin() + static_cast<std::ptrdiff_t>(i + len));
      auto surface = join(members);
      if (!seen.insert(surface).second) continue;
      Keyphrase kp{std::move(surface), len, 0.0, {}};
      double sum = 0.0;
      for (const auto& m : members) {
        const auto it = scores.find(m);
        const double s = it == scores.end() ? 0.0 : it->second;
        kp.member_scores.push_back(s);
        sum += s;
      }
      kp.score = sum / static_cast<double>(len);
      ranked.push_back({std::move(kp), i});
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), ranks_before);
  if (ranked.size() > config.max_candidates) ranked.resize(config.max_candidates);

  std::vector<Keyphrase> out;
  out.reserve(ranked.size());
  for (auto& r : ranked) out.push_back(std::move(r.phrase));
  return out;
}

std::vector<Keyphrase> extract_keywords(const TokenizedNote& note, const RakunConfig& config) {
  config.validate();
  const auto graph = build_token_graph(note, config.min_token_length);
  const auto merged = merge_meta_vertices(graph, config.merge_threshold);
  const auto centrality = load_centrality(merged.graph);
  const auto scores = score_tokens(merged.graph, centrality, config.alpha);
  auto phrases = form_keyphrases(note, scores, merged.merge_map, config);
  if (phrases.size() > config.retain_top) phrases.resize(config.retain_top);
  return phrases;
}

std::string distill_note(std::span<const Keyphrase> keyphrases) {
  std::string out;
  for (std::size_t i = 0; i < keyphrases.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += keyphrases[i].surface;
  }
  return out;
}

}  // namespace ttxai
