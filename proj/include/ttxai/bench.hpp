#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ttxai/classifier.hpp"
#include "ttxai/corpus.hpp"
#include "ttxai/explain.hpp"
#include "ttxai/fidelity.hpp"
#include "ttxai/keywords.hpp"

namespace ttxai {

std::vector<std::string> default_signal_tokens();

struct SyntheticSpec {
  std::size_t n_notes = 500;
  std::size_t filler_vocab_size = 2000;
  std::vector<std::string> signal_tokens = default_signal_tokens();
  std::size_t note_length = 200;
  std::size_t label_rule_threshold = 2;
  double signal_inject_prob = 0.35;
  // Copies of each present signal token scattered through the note.
  std::size_t signal_repeats = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  std::string note_id;
  std::vector<std::string> salient;  // present signal tokens, in signal_tokens order
  int label = 0;
};

struct SyntheticCorpus {
  std::vector<std::string> signal_tokens;
  std::vector<NoteRecord> notes;
  std::vector<GroundTruth> truth;
};

/// Pronounceable pseudo-words at pairwise edit distance >= 3 from each other
/// and from `avoid`, so they never collapse into meta vertices.
std::vector<std::string> filler_vocabulary(std::size_t size, std::span<const std::string> avoid,
                                           std::uint64_t seed);

/// Deterministic corpus: uniform filler with each signal token present with
/// probability signal_inject_prob (signal_repeats copies at random
/// positions); label 1 iff at least label_rule_threshold distinct signals
/// are present.
SyntheticCorpus generate_corpus(const SyntheticSpec& spec);

std::string ground_truth_jsonl(std::span<const GroundTruth> truth);
void write_ground_truth(const std::filesystem::path& path, std::span<const GroundTruth> truth);
std::vector<GroundTruth> parse_ground_truth(std::string_view content);

/// p1 = sigmoid(bias + sum of weights of the signal tokens present).
class PlantedSignalClassifier : public Classifier {
 public:
  PlantedSignalClassifier(std::map<std::string, double> weights, double bias)
      : weights_(std::move(weights)), bias_(bias) {}
  std::vector<ProbPair> predict(std::span<const std::string> texts) const override;
  double p1(std::string_view text) const;

 private:
  std::map<std::string, double> weights_;
  double bias_;
};

/// Distinct weights 1.0, 1.5, 2.0, ... over the signals (in order) and a
/// bias of -4.
ClassifierHandle make_planted_handle(std::span<const std::string> signals,
                                     std::size_t max_tokens = 1u << 20);

enum class OcclusionMode { single_deletion, shapley };

/// Attributions in focus-set order. single_deletion: p1(full) - p1(full
/// without element i). shapley: exact Shapley values over all 2^n element
/// subsets (n <= 10). Throws ValidationError for focus sets above 16
/// elements, or above 10 for Shapley.
std::vector<Attribution> exact_occlusion_attributions(const TokenizedNote& note,
                                                      const FocusSet& focus,
                                                      const ClassifierHandle& handle,
                                                      OcclusionMode mode);

struct Recovery {
  double precision_at_k = 0.0;
  double recall_at_k = 0.0;
};

/// Over the first k attributions after ranking; k stays the precision
/// denominator even if fewer attributions exist.
Recovery recovery_metrics(const Explanation& explanation, const std::set<std::string>& truth,
                          std::size_t k, RankBy rank_by = RankBy::signed_weight);

// ---------------------------------------------------------------------------
// Directional experiments

struct ExplainSettings {
  RakunConfig rakun;
  SurrogateConfig surrogate;
  FidelityConfig fidelity;
  std::size_t max_keyphrases = 512;  // focus-set keyphrase budget
  std::size_t classical_max_elements = 512;
  RankBy rank_by = RankBy::signed_weight;
};

/// Keyphrase-only focus set (synthetic notes carry no gazetteer entities).
FocusSet synthetic_focus_set(const TokenizedNote& note, const ExplainSettings& settings);

struct ModalityComparison {
  EvalReport raw;
  EvalReport distilled;
};

/// k-fold CV of the baseline on raw text and on the distilled keyword string,
/// both truncated to `max_tokens` for training and prediction.
ModalityComparison compare_modalities(const std::vector<NoteRecord>& notes,
                                      const RakunConfig& rakun, std::size_t max_tokens,
                                      std::size_t folds, const TrainOptions& train,
                                      std::uint64_t seed, std::size_t workers);

struct FidelityComparison {
  std::vector<DeletionCurve> focused;
  std::vector<DeletionCurve> classical;
  double focused_mean_auc = 0.0;
  double classical_mean_auc = 0.0;
  double focused_win_rate = 0.0;  // focused AUC strictly lower
};

/// Focused vs classical LIME deletion curves on the true-positive notes
/// among `notes` (label 1, p1 > 0.5), at most `max_notes` of them.
FidelityComparison compare_fidelity(const std::vector<NoteRecord>& notes,
                                    const ClassifierHandle& handle,
                                    const ExplainSettings& settings, std::size_t max_notes,
                                    std::size_t workers);

/// Trains the baseline on the first fold's training portion and compares
/// fidelity on that fold's held-out notes.
FidelityComparison heldout_fidelity(const std::vector<NoteRecord>& notes,
                                    const ExplainSettings& settings, const TrainOptions& train,
                                    std::size_t folds, std::size_t max_notes, std::uint64_t seed,
                                    std::size_t workers);

struct RecoveryReport {
  std::vector<std::string> note_ids;
  std::vector<double> precision_at_k;
  double mean_precision_at_k = 0.0;
  double mean_recall_at_k = 0.0;
};

/// Focused LIME against the planted oracle; precision/recall of the top-k
/// against each note's salient set. Notes without salient tokens are skipped.
RecoveryReport planted_recovery(const SyntheticCorpus& corpus, const ExplainSettings& settings,
                                std::size_t k, std::size_t workers);

struct AgreementReport {
  std::size_t n_notes = 0;
  std::size_t agreements = 0;
  double rate = 0.0;
};

/// Top-1 focused-LIME element vs top-1 single-deletion occlusion element on
/// the planted oracle, with focus sets capped at `max_focus` keyphrases.
/// Notes without planted tokens are skipped.
AgreementReport occlusion_agreement(const SyntheticCorpus& corpus, ExplainSettings settings,
                                    std::size_t max_focus, std::size_t workers);

}  // namespace ttxai
