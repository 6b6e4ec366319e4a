#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ttxai/classifier.hpp"
#include "ttxai/corpus.hpp"
#include "ttxai/entities.hpp"
#include "ttxai/keywords.hpp"

namespace ttxai {

enum class FocusSource { keyword, entity, token };

std::string_view to_string(FocusSource source);

/// Token-index range [begin, end) into TokenizedNote::tokens.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const TokenRange&) const = default;
};

struct FocusElement {
  std::string surface;
  FocusSource source = FocusSource::keyword;
  std::vector<TokenRange> occurrences;
};

struct FocusSet {
  std::string note_id;
  std::vector<FocusElement> elements;
  std::vector<std::string> warnings;  // dropped elements
};

/// Non-overlapping left-to-right occurrences of the space-separated token
/// sequence `surface` in `tokens`.
std::vector<TokenRange> find_occurrences(std::span<const std::string> tokens,
                                         std::string_view surface);

/// Union of the first `max_keyphrases` keyphrases and the entity matches
/// (already category-filtered), deduplicated by surface with keyphrases
/// first. Elements that never occur verbatim in the note are dropped with a
/// warning. Throws ValidationError if nothing is left.
FocusSet build_focus_set(std::span<const Keyphrase> keyphrases,
                         std::span<const EntityMatch> entities, const TokenizedNote& note,
                         std::size_t max_keyphrases = 512);

/// Every distinct token of the note as its own element, keeping the
/// `max_elements` most frequent (ties: first occurrence).
FocusSet token_focus_set(const TokenizedNote& note, std::size_t max_elements = 512);

struct SurrogateConfig {
  std::size_t n_samples = 1000;
  double keep_prob = 0.5;
  double kernel_width = 0.25;  // +inf gives uniform sample weights
  double ridge_lambda = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

using Mask = std::vector<std::uint8_t>;

/// Mask 0 is all ones; the rest keep each bit with keep_prob from a stream
/// seeded by (seed, note_id). An all-zero draw is redrawn once.
std::vector<Mask> sample_perturbations(const FocusSet& focus, const SurrogateConfig& config);

/// Marks further tokens in `deleted` until no multi-token surface in
/// `surfaces` occurs among the kept tokens. Needed because removing tokens
/// can make a masked phrase's words adjacent.
void close_deletions(std::span<const std::string> tokens, std::span<const std::string> surfaces,
                     std::vector<std::uint8_t>& deleted);

/// Tokens covered by any masked-out element's occurrences are removed (then
/// closed under close_deletions); the rest are joined with single spaces.
std::string render_perturbed_text(const TokenizedNote& note, const FocusSet& focus,
                                  const Mask& mask);

struct SurrogateFit {
  std::vector<double> weights;
  double intercept = 0.0;
};

/// Cosine distance between a mask and the all-ones vector (1 for all-zero).
double mask_cosine_distance(const Mask& mask);

/// Kernel-weighted ridge regression of `targets` on the mask bits, solved
/// through the normal equations; the intercept is not penalized.
SurrogateFit fit_surrogate(std::span<const Mask> masks, std::span<const double> targets,
                           const SurrogateConfig& config);

struct Attribution {
  std::string surface;
  double weight = 0.0;
};

struct Explanation {
  std::string note_id;
  std::string method;  // "focused" or "classical"
  std::vector<Attribution> attributions;
  double intercept = 0.0;
  int target_class = 1;
  std::uint64_t seed = 0;

  std::string to_json_line() const;
  static Explanation from_json_line(std::string_view line);
};

enum class RankBy { signed_weight, absolute };

/// Sorts by descending signed weight (or |weight|); ties keep element order.
void rank_attributions(std::vector<Attribution>& attributions, RankBy rank_by);

/// LIME over the given focus set: masks, rendered texts, one batched
/// predict_proba call, surrogate fit.
Explanation explain(const TokenizedNote& note, const FocusSet& focus,
                    const ClassifierHandle& handle, const SurrogateConfig& config,
                    RankBy rank_by = RankBy::signed_weight, std::string method = "focused");

/// Word-level LIME over the note's distinct tokens.
Explanation classical_lime(const TokenizedNote& note, const ClassifierHandle& handle,
                           const SurrogateConfig& config, std::size_t max_elements = 512,
                           RankBy rank_by = RankBy::signed_weight);

}  // namespace ttxai
