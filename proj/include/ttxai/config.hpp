#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ttxai/bench.hpp"
#include "ttxai/classifier.hpp"
#include "ttxai/corpus.hpp"
#include "ttxai/explain.hpp"
#include "ttxai/fidelity.hpp"
#include "ttxai/keywords.hpp"
#include "ttxai/reasoning.hpp"

namespace ttxai {

// Minimal TOML reader: [section] headers (one level), key = value pairs,
// basic and literal strings, integers, floats (inf/nan included), booleans
// and arrays of those. No inline tables, dates or dotted keys.
struct TomlValue;
using TomlArray = std::vector<TomlValue>;
struct TomlValue {
  std::variant<bool, std::int64_t, double, std::string, TomlArray> v;
  std::size_t line = 0;
};

struct TomlDocument {
  // "" holds the keys before the first header.
  std::map<std::string, std::map<std::string, TomlValue>> tables;
};

/// Throws ValidationError with the offending line number.
TomlDocument parse_toml(std::string_view text);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::builtin;
  std::string endpoint;    // command line (subprocess) or URL (http)
  std::string model_path;  // saved baseline model; trained on the fly if empty
  std::size_t max_tokens = 512;
  double timeout_s = 120.0;
  TrainOptions train;
};

struct EntityConfig {
  std::string gazetteer;  // TSV path; empty disables entity matching
  std::vector<std::string> excluded_categories{"DOSAGE", "FREQUENCY"};
};

struct ExplainConfig {
  std::size_t max_keyphrases = 512;
  std::size_t classical_max_elements = 512;
  RankBy rank_by = RankBy::signed_weight;
  std::size_t max_notes = 20;
};

struct BenchConfig {
  std::size_t modality_max_tokens = 50;
  std::size_t fidelity_max_notes = 20;
  std::size_t recovery_k = 5;
  std::size_t recovery_notes = 50;
  std::size_t agreement_notes = 100;
  std::size_t agreement_max_focus = 10;
  std::size_t focus_keyphrases = 512;
};

struct IoConfig {
  std::string corpus;
  std::string format;  // "jsonl", "csv" or empty for the file extension
  std::string out_dir = "out";
  std::vector<std::string> boilerplate_patterns;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t workers = 0;  // 0: one per logical core
  CohortConfig cohort;
  std::size_t folds = 5;
  RakunConfig rakun;
  EntityConfig entities;
  ClassifierConfig classifier;
  SurrogateConfig surrogate;
  ExplainConfig explain;
  FidelityConfig fidelity;
  PromptConfig prompt;
  SyntheticSpec synthetic;
  BenchConfig bench;
  IoConfig io;

  /// Copies the global seed into every seeded section.
  void propagate_seed();
  void validate() const;
  std::size_t resolved_workers() const;
};

/// Unknown sections or keys and ill-typed values are ValidationErrors.
RunConfig parse_run_config(std::string_view toml);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical TOML rendering; parsing it back yields the same config. The
/// worker count is left out because it never changes results.
std::string to_toml(const RunConfig& config);

/// Writes `<dir>/resolved_config.toml`.
void write_config_snapshot(const std::filesystem::path& dir, const RunConfig& config);

inline constexpr std::string_view kConfigSnapshotName = "resolved_config.toml";

}  // namespace ttxai
