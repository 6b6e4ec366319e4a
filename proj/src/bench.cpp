#include "ttxai/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ttxai/error.hpp"
#include "ttxai/parallel.hpp"
#include "ttxai/rng.hpp"
#include "ttxai/text.hpp"

namespace ttxai {

using json = nlohmann::json;

std::vector<std::string> default_signal_tokens() {
  return {"nephrolithiasis", "hydronephrosis", "pyelonephritis", "urosepsis", "nephrostomy"};
}

void SyntheticSpec::validate() const {
  if (n_notes < 1) throw ValidationError("synthetic: n_notes must be >= 1");
  if (filler_vocab_size < 1) throw ValidationError("synthetic: filler_vocab_size must be >= 1");
  if (signal_tokens.empty()) throw ValidationError("synthetic: no signal tokens");
  std::set<std::string> distinct;
  for (const auto& s : signal_tokens) {
    const auto toks = tokenize_words(s);
    if (toks.size() != 1 || toks.front() != s) {
      throw ValidationError("synthetic: signal token '" + s +
                            "' must be a single lowercase alphanumeric token");
    }
    if (!distinct.insert(s).second) throw ValidationError("synthetic: duplicate signal " + s);
  }
  if (label_rule_threshold < 1 || label_rule_threshold > signal_tokens.size()) {
    throw ValidationError("synthetic: label_rule_threshold must be in [1, #signal_tokens]");
  }
  if (signal_repeats < 1) throw ValidationError("synthetic: signal_repeats must be >= 1");
  if (note_length < signal_tokens.size() * signal_repeats) {
    throw ValidationError("synthetic: note_length must fit every signal token repeat");
  }
  if (!(signal_inject_prob >= 0.0 && signal_inject_prob <= 1.0)) {
    throw ValidationError("synthetic: signal_inject_prob must be in [0,1]");
  }
}

std::vector<std::string> filler_vocabulary(std::size_t size, std::span<const std::string> avoid,
                                           std::uint64_t seed) {
  static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  Rng rng(mix_seed(seed, hash_string("filler-vocabulary")));
  std::vector<std::string> words;
  std::set<std::string> seen;
  words.reserve(size);
  const std::size_t max_attempts = 200 * size + 10000;
  for (std::size_t attempt = 0; words.size() < size; ++attempt) {
    if (attempt == max_attempts) {
      throw ValidationError("synthetic: cannot build a filler vocabulary of " +
                            std::to_string(size) + " well-separated words");
    }
    std::string w;
    for (int syl = 0; syl < 4; ++syl) {
      w.push_back(kConsonants[rng.below(kConsonants.size())]);
      w.push_back(kVowels[rng.below(kVowels.size())]);
    }
    if (!seen.insert(w).second) continue;
    const auto far = [&](const std::string& other) { return levenshtein(w, other) >= 3; };
    if (std::all_of(avoid.begin(), avoid.end(), far) && std::all_of(words.begin(), words.end(), far)) {
      words.push_back(std::move(w));
    }
  }
  return words;
}

SyntheticCorpus generate_corpus(const SyntheticSpec& spec) {
  spec.validate();
  const auto vocab = filler_vocabulary(spec.filler_vocab_size, spec.signal_tokens, spec.seed);
  SyntheticCorpus corpus;
  corpus.signal_tokens = spec.signal_tokens;
  corpus.notes.reserve(spec.n_notes);
  corpus.truth.reserve(spec.n_notes);
  for (std::size_t i = 0; i < spec.n_notes; ++i) {
    Rng rng(mix_seed(spec.seed, i + 1));
    GroundTruth truth;
    std::vector<std::string> seq;
    for (const auto& s : spec.signal_tokens) {
      if (!rng.bernoulli(spec.signal_inject_prob)) continue;
      truth.salient.push_back(s);
      for (std::size_t r = 0; r < spec.signal_repeats; ++r) seq.push_back(s);
    }
    while (seq.size() < spec.note_length) seq.push_back(vocab[rng.below(vocab.size())]);
    rng.shuffle(seq);
    truth.label = truth.salient.size() >= spec.label_rule_threshold ? 1 : 0;

    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i + 1);
    truth.note_id = id;
    NoteRecord note;
    note.note_id = id;
    note.subject_id = "s" + std::string(id + 4);
    note.hadm_id = "h" + std::string(id + 4);
    note.text = join(seq);
    const double u = rng.uniform();
    note.los_days = std::round((truth.label ? 6.0 + 10.0 * u : 1.0 + 4.0 * u) * 10.0) / 10.0;
    note.label = truth.label;
    corpus.notes.push_back(std::move(note));
    corpus.truth.push_back(std::move(truth));
  }
  return corpus;
}

std::string ground_truth_jsonl(std::span<const GroundTruth> truth) {
  std::string out;
  for (const auto& t : truth) {
    out += json({{"note_id", t.note_id}, {"salient", t.salient}, {"label", t.label}}).dump();
    out.push_back('\n');
  }
  return out;
}

void write_ground_truth(const std::filesystem::path& path, std::span<const GroundTruth> truth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path.string());
  out << ground_truth_jsonl(truth);
  if (!out) throw IoError("error while writing: " + path.string());
}

std::vector<GroundTruth> parse_ground_truth(std::string_view content) {
  std::vector<GroundTruth> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      GroundTruth t;
      t.note_id = j.at("note_id").get<std::string>();
      t.salient = j.at("salient").get<std::vector<std::string>>();
      t.label = j.at("label").get<int>();
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw ValidationError("ground truth line " + std::to_string(row) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double PlantedSignalClassifier::p1(std::string_view text) const {
  double z = bias_;
  std::set<std::string> seen;
  for (auto& tok : tokenize_words(text)) {
    const auto it = weights_.find(tok);
    if (it != weights_.end() && seen.insert(tok).second) z += it->second;
  }
  return 1.0 / (1.0 + std::exp(-z));
}

std::vector<ProbPair> PlantedSignalClassifier::predict(std::span<const std::string> texts) const {
  std::vector<ProbPair> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const double p = p1(t);
    out.push_back({1.0 - p, p});
  }
  return out;
}

ClassifierHandle make_planted_handle(std::span<const std::string> signals,
                                     std::size_t max_tokens) {
  std::map<std::string, double> weights;
  for (std::size_t i = 0; i < signals.size(); ++i) {
    weights[signals[i]] = 1.0 + 0.5 * static_cast<double>(i);
  }
  return ClassifierHandle(ClassifierKind::builtin, "planted-signal", max_tokens,
                          std::make_shared<PlantedSignalClassifier>(std::move(weights), -4.0));
}

std::vector<Attribution> exact_occlusion_attributions(const TokenizedNote& note,
                                                      const FocusSet& focus,
                                                      const ClassifierHandle& handle,
                                                      OcclusionMode mode) {
  const std::size_t n = focus.elements.size();
  if (n == 0) throw ValidationError("occlusion: empty focus set");
  if (n > 16) throw ValidationError("occlusion: focus set larger than 16 elements");
  if (mode == OcclusionMode::shapley && n > 10) {
    throw ValidationError("occlusion: Shapley enumeration needs at most 10 elements");
  }
  std::vector<Attribution> out;
  if (mode == OcclusionMode::single_deletion) {
    std::vector<std::string> texts;
    texts.push_back(render_perturbed_text(note, focus, Mask(n, 1)));
    for (std::size_t i = 0; i < n; ++i) {
      Mask m(n, 1);
      m[i] = 0;
      texts.push_back(render_perturbed_text(note, focus, m));
    }
    const auto probs = handle.predict_proba(texts);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back({focus.elements[i].surface, probs[0].p1 - probs[i + 1].p1});
    }
    return out;
  }

  // Coalition value v(S) = p1 with only the elements in S kept.
  const std::size_t n_masks = std::size_t{1} << n;
  std::vector<std::string> texts;
  texts.reserve(n_masks);
  for (std::size_t bits = 0; bits < n_masks; ++bits) {
    Mask m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = (bits >> i) & 1U;
    texts.push_back(render_perturbed_text(note, focus, m));
  }
  const auto probs = handle.predict_proba(texts);
  // |S|! (n - |S| - 1)! / n!
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1) +
                         std::lgamma(static_cast<double>(n - s)) -
                         std::lgamma(static_cast<double>(n) + 1));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double phi = 0.0;
    for (std::size_t bits = 0; bits < n_masks; ++bits) {
      if ((bits >> i) & 1U) continue;
      const auto s = static_cast<std::size_t>(std::popcount(bits));
      phi += weight[s] * (probs[bits | (std::size_t{1} << i)].p1 - probs[bits].p1);
    }
    out.push_back({focus.elements[i].surface, phi});
  }
  return out;
}

Recovery recovery_metrics(const Explanation& explanation, const std::set<std::string>& truth,
                          std::size_t k, RankBy rank_by) {
  if (k < 1) throw ValidationError("recovery_metrics: k must be >= 1");
  if (truth.empty()) throw ValidationError("recovery_metrics: empty ground truth");
  auto ranked = explanation.attributions;
  rank_attributions(ranked, rank_by);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) hits += truth.count(ranked[i].surface);
  return {static_cast<double>(hits) / static_cast<double>(k),
          static_cast<double>(hits) / static_cast<double>(truth.size())};
}

// ---------------------------------------------------------------------------

FocusSet synthetic_focus_set(const TokenizedNote& note, const ExplainSettings& settings) {
  const auto keyphrases = extract_keywords(note, settings.rakun);
  return build_focus_set(keyphrases, {}, note, settings.max_keyphrases);
}

namespace {

std::vector<LabeledText> labeled(const std::vector<NoteRecord>& notes,
                                 const std::vector<std::string>& texts) {
  std::vector<LabeledText> out;
  out.reserve(notes.size());
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (!notes[i].label) throw ValidationError("unlabeled note " + notes[i].note_id);
    out.push_back({notes[i].note_id, texts[i], *notes[i].label});
  }
  return out;
}

}  // namespace

ModalityComparison compare_modalities(const std::vector<NoteRecord>& notes,
                                      const RakunConfig& rakun, std::size_t max_tokens,
                                      std::size_t folds, const TrainOptions& train,
                                      std::uint64_t seed, std::size_t workers) {
  std::vector<std::string> raw(notes.size());
  std::vector<std::string> distilled(notes.size());
  parallel_for(notes.size(), workers, [&](std::size_t i) {
    const auto tokenized = preprocess(notes[i]);
    raw[i] = join(tokenized.tokens);
    distilled[i] = distill_note(extract_keywords(tokenized, rakun));
  });
  const auto split = stratified_folds(notes, folds, seed);
  const ModelFactory factory = [&](std::span<const LabeledText> fold_train) {
    std::vector<LabeledText> truncated(fold_train.begin(), fold_train.end());
    for (auto& ex : truncated) ex.text = truncate_tokens(ex.text, max_tokens);
    auto model = std::make_shared<BaselineModel>(train_baseline(truncated, train));
    return make_builtin_handle(std::move(model), max_tokens, workers);
  };
  ModalityComparison out;
  out.raw = evaluate_cv(labeled(notes, raw), split, factory);
  out.distilled = evaluate_cv(labeled(notes, distilled), split, factory);
  return out;
}

FidelityComparison compare_fidelity(const std::vector<NoteRecord>& notes,
                                    const ClassifierHandle& handle,
                                    const ExplainSettings& settings, std::size_t max_notes,
                                    std::size_t workers) {
  std::vector<TokenizedNote> candidates;
  std::vector<std::string> texts;
  for (const auto& n : notes) {
    if (n.label != 1) continue;
    candidates.push_back(preprocess(n));
    texts.push_back(join(candidates.back().tokens));
  }
  if (candidates.empty()) throw ValidationError("fidelity comparison: no positive notes");
  const auto probs = handle.predict_proba(texts);
  std::vector<TokenizedNote> selected;
  for (std::size_t i = 0; i < candidates.size() && selected.size() < max_notes; ++i) {
    if (probs[i].p1 > 0.5) selected.push_back(std::move(candidates[i]));
  }
  if (selected.empty()) throw ValidationError("fidelity comparison: no true-positive notes");

  FidelityComparison out;
  out.focused.resize(selected.size());
  out.classical.resize(selected.size());
  parallel_for(selected.size(), workers, [&](std::size_t i) {
    const auto& note = selected[i];
    const auto focus = synthetic_focus_set(note, settings);
    const auto focused = explain(note, focus, handle, settings.surrogate, settings.rank_by);
    const auto classical = classical_lime(note, handle, settings.surrogate,
                                          settings.classical_max_elements, settings.rank_by);
    out.focused[i] = deletion_curve(note, focused, handle, settings.fidelity);
    out.classical[i] = deletion_curve(note, classical, handle, settings.fidelity);
  });
  std::size_t wins = 0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    out.focused_mean_auc += out.focused[i].auc;
    out.classical_mean_auc += out.classical[i].auc;
    wins += out.focused[i].auc < out.classical[i].auc ? 1 : 0;
  }
  const double n = static_cast<double>(selected.size());
  out.focused_mean_auc /= n;
  out.classical_mean_auc /= n;
  out.focused_win_rate = static_cast<double>(wins) / n;
  return out;
}

FidelityComparison heldout_fidelity(const std::vector<NoteRecord>& notes,
                                    const ExplainSettings& settings, const TrainOptions& train,
                                    std::size_t folds, std::size_t max_notes, std::uint64_t seed,
                                    std::size_t workers) {
  const auto split = stratified_folds(notes, folds, seed);
  std::map<std::string, const NoteRecord*> by_id;
  for (const auto& n : notes) by_id[n.note_id] = &n;
  std::vector<LabeledText> train_set;
  for (const auto& id : split.front().train_ids) {
    const auto* n = by_id.at(id);
    train_set.push_back({id, join(preprocess(*n).tokens), *n->label});
  }
  auto model = std::make_shared<BaselineModel>(train_baseline(train_set, train));
  const auto handle = make_builtin_handle(std::move(model), 1u << 20, 1);
  std::vector<NoteRecord> heldout;
  for (const auto& id : split.front().test_ids) heldout.push_back(*by_id.at(id));
  return compare_fidelity(heldout, handle, settings, max_notes, workers);
}

RecoveryReport planted_recovery(const SyntheticCorpus& corpus, const ExplainSettings& settings,
                                std::size_t k, std::size_t workers) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < corpus.notes.size(); ++i) {
    if (!corpus.truth[i].salient.empty()) idx.push_back(i);
  }
  if (idx.empty()) throw ValidationError("planted recovery: no note carries a signal");
  const auto handle = make_planted_handle(corpus.signal_tokens);

  RecoveryReport report;
  report.note_ids.resize(idx.size());
  report.precision_at_k.resize(idx.size());
  std::vector<double> recall(idx.size());
  parallel_for(idx.size(), workers, [&](std::size_t j) {
    const auto& record = corpus.notes[idx[j]];
    const auto note = preprocess(record);
    const auto focus = synthetic_focus_set(note, settings);
    const auto expl = explain(note, focus, handle, settings.surrogate, settings.rank_by);
    const std::set<std::string> truth(corpus.truth[idx[j]].salient.begin(),
                                      corpus.truth[idx[j]].salient.end());
    const auto r = recovery_metrics(expl, truth, k, settings.rank_by);
    report.note_ids[j] = record.note_id;
    report.precision_at_k[j] = r.precision_at_k;
    recall[j] = r.recall_at_k;
  });
  const double n = static_cast<double>(idx.size());
  report.mean_precision_at_k =
      std::accumulate(report.precision_at_k.begin(), report.precision_at_k.end(), 0.0) / n;
  report.mean_recall_at_k = std::accumulate(recall.begin(), recall.end(), 0.0) / n;
  return report;
}

AgreementReport occlusion_agreement(const SyntheticCorpus& corpus, ExplainSettings settings,
                                    std::size_t max_focus, std::size_t workers) {
  settings.max_keyphrases = max_focus;
  const auto handle = make_planted_handle(corpus.signal_tokens);
  // Without a planted token every element ties at zero and top-1 is arbitrary.
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < corpus.notes.size(); ++i) {
    if (!corpus.truth[i].salient.empty()) idx.push_back(i);
  }
  if (idx.empty()) throw ValidationError("occlusion agreement: no note carries a signal");
  std::vector<std::uint8_t> agree(idx.size(), 0);
  parallel_for(idx.size(), workers, [&](std::size_t j) {
    const auto note = preprocess(corpus.notes[idx[j]]);
    const auto focus = synthetic_focus_set(note, settings);
    const auto lime = explain(note, focus, handle, settings.surrogate, RankBy::signed_weight);
    auto occ = exact_occlusion_attributions(note, focus, handle, OcclusionMode::single_deletion);
    rank_attributions(occ, RankBy::signed_weight);
    agree[j] = lime.attributions.front().surface == occ.front().surface ? 1 : 0;
  });
  AgreementReport report;
  report.n_notes = idx.size();
  report.agreements = static_cast<std::size_t>(std::count(agree.begin(), agree.end(), 1));
  report.rate = static_cast<double>(report.agreements) / static_cast<double>(report.n_notes);
  return report;
}

}  // namespace ttxai
