// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ttxai/bench.hpp"
#include "ttxai/centrality.hpp"
#include "ttxai/classifier.hpp"
#include "ttxai/cli.hpp"
#include "ttxai/explain.hpp"
#include "ttxai/reasoning.hpp"
#include "ttxai/rng.hpp"

using namespace ttxai;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 42;
constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// --- 1 ---------------------------------------------------------------------

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

// Enumerates every shortest path explicitly, splitting the unit load at each branch.
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

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(kSeed);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + rng.below(12);
    const double p = 0.1 + 0.5 * rng.uniform();
    Digraph g(n);
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v < n; ++v) {
        if (u != v && rng.bernoulli(p)) g.add_edge(u, v);
      }
    }
    const auto fast = load_centrality_raw(g);
    const auto slow = brute_force_load(g);
    for (std::size_t v = 0; v < n; ++v) worst = std::max(worst, std::abs(fast[v] - slow[v]));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-12 && secs < 10.0, fmt("max |diff| %.3g over 200 graphs, %.2f s", worst, secs)};
}

// --- 2 ---------------------------------------------------------------------

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(kSeed);
  double worst = 0.0;
  for (std::size_t n = 1; n <= 10; ++n) {
    std::vector<double> coef(n);
    for (auto& c : coef) c = (rng.uniform() - 0.5) * 0.1;
    const double b = 0.3 + 0.2 * rng.uniform();
    std::vector<Mask> masks;
    std::vector<double> targets;
    for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
      Mask m(n);
      double y = b;
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = (bits >> i) & 1U;
        y += coef[i] * m[i];
      }
      masks.push_back(std::move(m));
      targets.push_back(y);
    }
    SurrogateConfig cfg;
    cfg.kernel_width = std::numeric_limits<double>::infinity();
    cfg.ridge_lambda = 1e-8;
    const auto fit = fit_surrogate(masks, targets, cfg);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(fit.weights[i] - coef[i]));
    worst = std::max(worst, std::abs(fit.intercept - b));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 5.0, fmt("max coefficient error %.3g for n=1..10, %.2f s", worst, secs)};
}

// --- 3 ---------------------------------------------------------------------

SyntheticSpec directional_spec() {
  SyntheticSpec s;
  s.n_notes = 500;
  s.note_length = 200;
  s.seed = kSeed;
  return s;
}

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = generate_corpus(directional_spec());
  ExplainSettings settings;
  settings.surrogate.seed = kSeed;
  TrainOptions train;
  train.seed = kSeed;
  const auto cmp = heldout_fidelity(corpus.notes, settings, train, 5, 1u << 20, kSeed, 0);
  const double secs = seconds_since(t0);
  const bool pass = cmp.focused_mean_auc < cmp.classical_mean_auc && cmp.focused_win_rate >= 0.7 &&
                    secs < 300.0;
  return {pass, fmt("focused AUC %.4f vs classical %.4f, focused wins %.0f%% of %.0f notes", cmp.focused_mean_auc,
                    cmp.classical_mean_auc, 100.0 * cmp.focused_win_rate,
                    static_cast<double>(cmp.focused.size())) +
                    fmt(", %.1f s", secs)};
}

// --- 4 ---------------------------------------------------------------------

Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = generate_corpus(directional_spec());
  TrainOptions train;
  train.seed = kSeed;
  const auto cmp = compare_modalities(corpus.notes, RakunConfig{}, 50, 5, train, kSeed, 0);
  const double raw = cmp.raw.macro_f1_summary.mean;
  const double dist = cmp.distilled.macro_f1_summary.mean;
  const double secs = seconds_since(t0);
  return {dist - raw >= 0.05 && secs < 300.0,
          fmt("macro-F1 distilled %.4f vs raw %.4f (gain %+.4f), %.1f s", dist, raw, dist - raw, secs)};
}

// --- 5 ---------------------------------------------------------------------

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticSpec spec;
  spec.n_notes = 50;
  spec.signal_inject_prob = 1.0;
  spec.seed = kSeed;
  const auto corpus = generate_corpus(spec);
  ExplainSettings settings;
  settings.surrogate.seed = kSeed;
  const auto rep = planted_recovery(corpus, settings, 5, 0);
  const double secs = seconds_since(t0);
  return {rep.mean_precision_at_k >= 0.8 && rep.note_ids.size() == 50 && secs < 120.0,
          fmt("precision@5 %.4f over %.0f notes, %.1f s", rep.mean_precision_at_k,
              static_cast<double>(rep.note_ids.size()), secs)};
}

// --- 6 ---------------------------------------------------------------------

Outcome criterion6() {
  SyntheticSpec spec;
  spec.n_notes = 400;
  spec.seed = kSeed;
  auto corpus = generate_corpus(spec);
  // The first 100 notes that carry a planted signal.
  SyntheticCorpus subset;
  subset.signal_tokens = corpus.signal_tokens;
  for (std::size_t i = 0; i < corpus.notes.size() && subset.notes.size() < 100; ++i) {
    if (corpus.truth[i].salient.empty()) continue;
    subset.notes.push_back(corpus.notes[i]);
    subset.truth.push_back(corpus.truth[i]);
  }
  ExplainSettings settings;
  settings.surrogate.seed = kSeed;
  const auto rep = occlusion_agreement(subset, settings, 10, 0);
  return {rep.rate >= 0.95 && rep.n_notes == 100,
          fmt("top-1 agreement %.2f on %.0f notes", rep.rate, static_cast<double>(rep.n_notes))};
}

// --- 7 ---------------------------------------------------------------------

Outcome criterion7() {
  SyntheticSpec spec;
  spec.n_notes = 60;
  spec.note_length = 80;
  spec.seed = kSeed;
  const auto corpus = generate_corpus(spec);
  const auto planted = make_planted_handle(corpus.signal_tokens);
  // A non-additive classifier as well, so interactions are exercised.
  const auto& sig = corpus.signal_tokens;
  const auto pairwise = make_function_handle(
      [sig](const std::string& text) {
        const auto toks = split_whitespace(text);
        auto has = [&](const std::string& s) { return std::find(toks.begin(), toks.end(), s) != toks.end(); };
        const double x = (has(sig[0]) && has(sig[1]) ? 1.5 : 0.0) + (has(sig[2]) ? 0.7 : 0.0) -
                         (has(sig[3]) && !has(sig[4]) ? 0.4 : 0.0);
        return 1.0 / (1.0 + std::exp(2.0 - x));
      },
      1u << 20);
  double worst = 0.0;
  std::size_t instances = 0;
  RakunConfig rakun;
  for (const auto& record : corpus.notes) {
    const auto note = preprocess(record);
    const auto focus = build_focus_set(extract_keywords(note, rakun), {}, note, 8);
    const std::size_t n = focus.elements.size();
    for (const auto* h : {&planted, &pairwise}) {
      const auto phi = exact_occlusion_attributions(note, focus, *h, OcclusionMode::shapley);
      double sum = 0.0;
      for (const auto& a : phi) sum += a.weight;
      const double full = h->positive_probability(render_perturbed_text(note, focus, Mask(n, 1)));
      const double empty = h->positive_probability(render_perturbed_text(note, focus, Mask(n, 0)));
      worst = std::max(worst, std::abs(sum - (full - empty)));
      ++instances;
    }
  }
  return {worst < 1e-9, fmt("max |sum - (p_full - p_empty)| %.3g over %.0f instances", worst,
                            static_cast<double>(instances))};
}

// --- 8 ---------------------------------------------------------------------

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<missing " + p.string() + ">";
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion8() {
  const fs::path dir = fs::path(TTXAI_FIXTURES_DIR) / "prompts";
  std::vector<std::string> failures;
  if (build_full_text_prompt("abc") != read_file(dir / "full_text_abc.txt")) failures.push_back("full_text");
  if (build_hybrid_prompt("renal calculus fever", "abc") != read_file(dir / "hybrid_abc.txt")) {
    failures.push_back("hybrid");
  }
  auto scores = [](PromptKind kind, std::vector<int> values) {
    std::vector<JudgeScore> out;
    for (std::size_t i = 0; i < values.size(); ++i) out.push_back({"n", kind, i, values[i]});
    return out;
  };
  // Hand-computed sample std: sqrt(2/4) = 0.707, sqrt(5/3) = 1.291, sqrt(1/3) = 0.577.
  const std::vector<std::pair<std::vector<int>, std::string>> cases{
      {{4, 4, 5, 3, 4}, "4.00 \xC2\xB1 0.71"},
      {{5, 5, 5}, "5.00 \xC2\xB1 0.00"},
      {{1, 2, 3, 4}, "2.50 \xC2\xB1 1.29"},
      {{3}, "3.00 \xC2\xB1 0.00"},
  };
  for (const auto& [values, expected] : cases) {
    const auto s = aggregate_scores(scores(PromptKind::hybrid, values));
    if (s.size() != 1 || s[0].formatted() != expected) failures.push_back("aggregate " + expected);
  }
  auto mixed = scores(PromptKind::full_text, {2, 3});
  const auto hybrid = scores(PromptKind::hybrid, {4, 5, 5});
  mixed.insert(mixed.end(), hybrid.begin(), hybrid.end());
  const auto s = aggregate_scores(mixed);
  if (s.size() != 2 || s[0].formatted() != "2.50 \xC2\xB1 0.71" || s[1].formatted() != "4.67 \xC2\xB1 0.58") {
    failures.push_back("grouped aggregate");
  }
  std::string detail = failures.empty() ? "golden prompts byte-identical, 5 aggregates match" : "mismatch:";
  for (const auto& f : failures) detail += " " + f;
  return {failures.empty(), detail};
}

// --- 9 ---------------------------------------------------------------------

int run_cli_quiet(std::vector<std::string> args) {
  args.insert(args.begin(), "ttxai");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

Outcome criterion9() {
  const auto root = fs::temp_directory_path() / ("ttxai_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string sample = std::string(TTXAI_FIXTURES_DIR) + "/configs/sample.toml";
  const std::string small = std::string(TTXAI_FIXTURES_DIR) + "/configs/small.toml";
  const std::vector<std::vector<std::string>> pipeline{
      {"ingest"}, {"keywords"}, {"train"}, {"train", "--input", "distilled"}, {"explain"}, {"fidelity"}};
  std::map<std::string, std::map<std::string, std::string>> outputs;
  std::size_t compared = 0;
  std::vector<std::string> diffs;
  // Same output directories for both runs, so the resolved configs match too.
  const auto pipe_dir = root / "pipeline";
  const auto bench_dir = root / "bench";
  for (const char* workers : {"1", "4"}) {
    fs::remove_all(root);
    for (const auto& step : pipeline) {
      std::vector<std::string> args = step;
      for (const auto& a : {std::string("--config"), sample, std::string("--workers"), std::string(workers),
                            std::string("--out"), pipe_dir.string()}) {
        args.push_back(a);
      }
      if (run_cli_quiet(args) != 0) return {false, "pipeline step " + step[0] + " failed"};
    }
    if (run_cli_quiet({"bench", "--spec", small, "--workers", workers, "--out", bench_dir.string()}) != 0) {
      return {false, "bench failed"};
    }
    outputs[std::string("pipeline_") + workers] = snapshot(pipe_dir);
    outputs[std::string("bench_") + workers] = snapshot(bench_dir);
  }
  for (const char* kind : {"pipeline_", "bench_"}) {
    const auto& a = outputs[std::string(kind) + "1"];
    const auto& b = outputs[std::string(kind) + "4"];
    if (a.size() != b.size()) diffs.push_back(std::string(kind) + "file set");
    for (const auto& [name, content] : a) {
      ++compared;
      const auto it = b.find(name);
      if (it == b.end() || it->second != content) diffs.push_back(name);
    }
  }
  fs::remove_all(root);
  std::string detail = fmt("%.0f files byte-compared between --workers 1 and 4", static_cast<double>(compared));
  for (const auto& d : diffs) detail += "; differs: " + d;
  return {diffs.empty() && compared > 0, detail};
}

// --- 10 --------------------------------------------------------------------

Outcome criterion10() {
  Rng rng(kSeed);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t dim = 3 + rng.below(8);
    const std::size_t n = 4 + rng.below(10);
    std::vector<SparseRow> rows(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::uint32_t j = 0; j < dim; ++j) {
        if (rng.bernoulli(0.6)) rows[i].entries.emplace_back(j, rng.uniform() * 2 - 1);
      }
      labels[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2));
    }
    const WeightedLogisticLoss loss(rows, labels, dim, class_weights_for(labels), 0.05 + rng.uniform() * 0.1);
    std::vector<double> params(loss.num_params());
    for (auto& p : params) p = rng.uniform() * 2 - 1;
    const auto g = loss.gradient(params);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto plus = params;
      auto minus = params;
      const double h = 1e-6;
      plus[k] += h;
      minus[k] -= h;
      const double fd = (loss.value(plus) - loss.value(minus)) / (2 * h);
      const double denom = std::max(1e-8, std::max(std::abs(fd), std::abs(g[k])));
      worst = std::max(worst, std::abs(fd - g[k]) / denom);
    }
  }
  return {worst < 1e-5, fmt("max relative error %.3g over 20 instances", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10},
  };
  int failed = 0;
  for (const auto& [id, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << ")"
              << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
