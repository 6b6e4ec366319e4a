#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ttxai/corpus.hpp"

namespace ttxai {

struct RakunConfig {
  std::size_t max_candidates = 1024;
  double merge_threshold = 1.1;
  double alpha = 0.3;
  std::size_t min_token_length = 3;
  std::size_t retain_top = 512;
  std::size_t max_phrase_len = 3;
  double phrase_pool_fraction = 0.2;

  /// Throws ValidationError when a field is out of range.
  void validate() const;
};

/// Directed co-occurrence graph. Ordered containers keep iteration (and so
/// every downstream tie-break) independent of hashing.
struct TokenGraph {
  std::map<std::string, std::size_t> node_freq;
  std::map<std::pair<std::string, std::string>, std::size_t> edges;

  std::size_t total_edge_weight() const;
};

/// Tokens shorter than `min_token_length` code points are skipped and the
/// surviving neighbours on either side are linked ("a of b" gives a->b).
/// Throws ValidationError if nothing survives.
TokenGraph build_token_graph(const TokenizedNote& note, std::size_t min_token_length);

/// Tokens of `note` that survive the length filter, in order.
std::vector<std::string> surviving_tokens(const TokenizedNote& note,
                                          std::size_t min_token_length);

/// Code-point Levenshtein distance.
std::size_t levenshtein(std::string_view a, std::string_view b);

struct MergeResult {
  TokenGraph graph;
  std::map<std::string, std::string> merge_map;  // absorbed -> final survivor
  std::size_t dropped_self_loop_weight = 0;
};

/// Meta-vertex construction. Candidate pairs are visited once, in descending
/// order of combined frequency; a pair merges when the edit distance between
/// the current survivors of its two ends is at most
/// ceil(max(len) * (merge_threshold - 1)). The more frequent survivor absorbs
/// the other (ties: lexicographically smaller survives).
MergeResult merge_meta_vertices(const TokenGraph& graph, double merge_threshold);

/// Normalized load centrality over the graph's hop-count topology.
std::map<std::string, double> load_centrality(const TokenGraph& graph);

/// alpha * freq/max(freq) + (1 - alpha) * cent/max(cent).
std::map<std::string, double> score_tokens(const TokenGraph& graph,
                                           const std::map<std::string, double>& centrality,
                                           double alpha);

struct Keyphrase {
  std::string surface;
  std::size_t n = 1;
  double score = 0.0;
  std::vector<double> member_scores;
};

/// Unigrams for every scored token plus 2..max_phrase_len windows of adjacent
/// pooled tokens, ranked by score (ties: first occurrence, then surface).
std::vector<Keyphrase> form_keyphrases(const TokenizedNote& note,
                                       const std::map<std::string, double>& scores,
                                       const std::map<std::string, std::string>& merge_map,
                                       const RakunConfig& config);

/// Full pipeline: graph, meta vertices, centrality, scores, phrases, then
/// truncation to retain_top.
std::vector<Keyphrase> extract_keywords(const TokenizedNote& note, const RakunConfig& config);

/// Surfaces joined by single spaces in rank order.
std::string distill_note(std::span<const Keyphrase> keyphrases);

}  // namespace ttxai
