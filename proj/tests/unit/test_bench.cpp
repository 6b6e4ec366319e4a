#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ttxai/bench.hpp"
#include "ttxai/error.hpp"
#include "ttxai/keywords.hpp"
#include "ttxai/text.hpp"

using namespace ttxai;

namespace {

SyntheticSpec small_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.n_notes = 60;
  s.filler_vocab_size = 200;
  s.note_length = 50;
  s.seed = seed;
  return s;
}

bool has_token(const std::string& text, const std::string& token) {
  const auto toks = split_whitespace(text);
  return std::find(toks.begin(), toks.end(), token) != toks.end();
}

FocusSet single_token_focus(const TokenizedNote& note, const std::vector<std::string>& surfaces) {
  FocusSet f;
  f.note_id = note.note_id;
  for (const auto& s : surfaces) f.elements.push_back({s, FocusSource::token, find_occurrences(note.tokens, s)});
  return f;
}

// Shapley values by averaging marginal contributions over all orderings.
std::vector<double> permutation_shapley(const TokenizedNote& note, const FocusSet& focus,
                                        const ClassifierHandle& h) {
  const std::size_t n = focus.elements.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(n, 0.0);
  double perms = 0;
  do {
    Mask m(n, 0);
    double prev = h.positive_probability(render_perturbed_text(note, focus, m));
    for (auto i : order) {
      m[i] = 1;
      const double cur = h.positive_probability(render_perturbed_text(note, focus, m));
      phi[i] += cur - prev;
      prev = cur;
    }
    ++perms;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& v : phi) v /= perms;
  return phi;
}

}  // namespace

TEST(SyntheticProperty, LabelRuleAndSalientSets) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto c = generate_corpus(small_spec(seed));
    ASSERT_EQ(c.notes.size(), 60u);
    for (std::size_t i = 0; i < c.notes.size(); ++i) {
      std::vector<std::string> present;
      for (const auto& s : c.signal_tokens) {
        if (has_token(c.notes[i].text, s)) present.push_back(s);
      }
      EXPECT_EQ(present, c.truth[i].salient);
      EXPECT_EQ(c.notes[i].label, present.size() >= 2 ? 1 : 0);
      EXPECT_EQ(c.truth[i].label, c.notes[i].label);
      EXPECT_EQ(c.truth[i].note_id, c.notes[i].note_id);
    }
  }
}

TEST(Synthetic, DeterministicPerSeed) {
  const auto a = generate_corpus(small_spec(4));
  const auto b = generate_corpus(small_spec(4));
  const auto c = generate_corpus(small_spec(5));
  EXPECT_EQ(a.notes[0].text, b.notes[0].text);
  EXPECT_NE(a.notes[0].text, c.notes[0].text);
  auto bad = small_spec(1);
  bad.signal_inject_prob = 1.5;
  EXPECT_THROW(generate_corpus(bad), ValidationError);
}

TEST(SyntheticProperty, FillersNeverMergeWithEachOtherOrSignals) {
  const auto signals = default_signal_tokens();
  const auto fillers = filler_vocabulary(150, signals, 9);
  ASSERT_EQ(fillers.size(), 150u);
  for (std::size_t i = 0; i < fillers.size(); ++i) {
    for (const auto& s : signals) EXPECT_GE(levenshtein(fillers[i], s), 3u);
    for (std::size_t j = i + 1; j < fillers.size(); ++j) {
      EXPECT_GE(levenshtein(fillers[i], fillers[j]), 3u) << fillers[i] << " " << fillers[j];
    }
  }
}

TEST(GroundTruth, JsonlRoundTrip) {
  const auto c = generate_corpus(small_spec(6));
  const auto back = parse_ground_truth(ground_truth_jsonl(c.truth));
  ASSERT_EQ(back.size(), c.truth.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].note_id, c.truth[i].note_id);
    EXPECT_EQ(back[i].salient, c.truth[i].salient);
    EXPECT_EQ(back[i].label, c.truth[i].label);
  }
  EXPECT_THROW(parse_ground_truth("{\"note_id\":\"x\"}\n"), ValidationError);
}

TEST(Planted, ProbabilityFollowsWeights) {
  const std::vector<std::string> signals{"aaa", "bbb"};
  const auto h = make_planted_handle(signals);
  const auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  EXPECT_NEAR(h.positive_probability("xxx"), sig(-4.0), 1e-12);
  EXPECT_NEAR(h.positive_probability("aaa xxx aaa"), sig(-3.0), 1e-12);
  EXPECT_NEAR(h.positive_probability("bbb aaa"), sig(-1.5), 1e-12);
}

TEST(Shapley, SymmetryNullPlayerAndEfficiency) {
  const auto note = tokenize_note("n", "aaa xxx bbb ccc");
  const auto focus = single_token_focus(note, {"aaa", "bbb", "ccc"});
  // Only the pair (aaa, bbb) matters.
  const auto h = make_function_handle(
      [](const std::string& t) { return has_token(t, "aaa") && has_token(t, "bbb") ? 0.9 : 0.1; }, 64);
  const auto phi = exact_occlusion_attributions(note, focus, h, OcclusionMode::shapley);
  ASSERT_EQ(phi.size(), 3u);
  EXPECT_NEAR(phi[0].weight, 0.4, 1e-12);
  EXPECT_NEAR(phi[1].weight, 0.4, 1e-12);
  EXPECT_NEAR(phi[2].weight, 0.0, 1e-12);
  EXPECT_NEAR(phi[0].weight + phi[1].weight + phi[2].weight, 0.9 - 0.1, 1e-12);
}

TEST(ShapleyProperty, MatchesPermutationOracle) {
  const auto c = generate_corpus(small_spec(8));
  const auto h = make_planted_handle(c.signal_tokens);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < c.notes.size() && checked < 4; ++i) {
    if (c.truth[i].salient.size() < 2) continue;
    ++checked;
    const auto note = preprocess(c.notes[i]);
    auto surfaces = c.truth[i].salient;
    surfaces.push_back(note.tokens[0] == surfaces[0] ? note.tokens[1] : note.tokens[0]);
    std::sort(surfaces.begin(), surfaces.end());
    surfaces.erase(std::unique(surfaces.begin(), surfaces.end()), surfaces.end());
    if (surfaces.size() > 6) surfaces.resize(6);
    const auto focus = single_token_focus(note, surfaces);
    const auto fast = exact_occlusion_attributions(note, focus, h, OcclusionMode::shapley);
    const auto slow = permutation_shapley(note, focus, h);
    for (std::size_t j = 0; j < slow.size(); ++j) EXPECT_NEAR(fast[j].weight, slow[j], 1e-12);
  }
  EXPECT_EQ(checked, 4u);
}

TEST(Occlusion, SingleDeletionAndLimits) {
  const auto note = tokenize_note("n", "aaa xxx bbb");
  const auto h = make_planted_handle(std::vector<std::string>{"aaa", "bbb"});
  const auto focus = single_token_focus(note, {"aaa", "xxx"});
  const auto occ = exact_occlusion_attributions(note, focus, h, OcclusionMode::single_deletion);
  const double full = h.positive_probability("aaa xxx bbb");
  EXPECT_NEAR(occ[0].weight, full - h.positive_probability("xxx bbb"), 1e-12);
  EXPECT_NEAR(occ[1].weight, 0.0, 1e-12);

  std::vector<std::string> many;
  std::string text;
  for (int i = 0; i < 11; ++i) {
    many.push_back("t" + std::to_string(i));
    text += many.back() + " ";
  }
  const auto big = tokenize_note("b", text);
  EXPECT_THROW(exact_occlusion_attributions(big, single_token_focus(big, many), h, OcclusionMode::shapley),
               ValidationError);
  EXPECT_NO_THROW(exact_occlusion_attributions(big, single_token_focus(big, many), h,
                                               OcclusionMode::single_deletion));
}

TEST(Recovery, PrecisionAndRecallAtK) {
  Explanation e;
  e.note_id = "n";
  e.attributions = {{"a", 0.9}, {"b", 0.8}, {"x", 0.1}, {"y", 0.05}, {"z", 0.0}};
  const auto r = recovery_metrics(e, {"a", "b"}, 2);
  EXPECT_DOUBLE_EQ(r.precision_at_k, 1.0);
  EXPECT_DOUBLE_EQ(r.recall_at_k, 1.0);
  const auto r5 = recovery_metrics(e, {"a", "b", "q", "r", "s"}, 5);
  EXPECT_DOUBLE_EQ(r5.precision_at_k, 0.4);
  EXPECT_DOUBLE_EQ(r5.recall_at_k, 0.4);

  Explanation short_e = e;
  short_e.attributions.resize(2);
  EXPECT_DOUBLE_EQ(recovery_metrics(short_e, {"a", "b"}, 5).precision_at_k, 0.4);
  EXPECT_THROW(recovery_metrics(e, {}, 5), ValidationError);
  EXPECT_THROW(recovery_metrics(e, {"a"}, 0), ValidationError);
}

TEST(Recovery, PlantedSignalsSurfaceOnEasyCorpus) {
  auto spec = small_spec(10);
  spec.n_notes = 6;
  spec.signal_inject_prob = 1.0;
  const auto c = generate_corpus(spec);
  ExplainSettings settings;
  settings.surrogate.n_samples = 400;
  const auto report = planted_recovery(c, settings, 5, 1);
  EXPECT_EQ(report.note_ids.size(), 6u);
  EXPECT_GE(report.mean_precision_at_k, 0.6);
}
