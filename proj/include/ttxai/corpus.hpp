#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ttxai/text.hpp"

namespace ttxai {

struct NoteRecord {
  std::string note_id;
  std::string subject_id;
  std::string hadm_id;
  std::string text;
  double los_days = 0.0;
  std::optional<int> label;
};

struct Rejection {
  std::size_t row = 0;  // 1-based data row (line for JSONL, record for CSV)
  std::string note_id;
  std::string reason;
};

struct LoadResult {
  std::vector<NoteRecord> records;
  std::vector<Rejection> rejections;
};

enum class CorpusFormat { jsonl, csv };

CorpusFormat parse_corpus_format(std::string_view name);

/// Guesses the format from the file extension (".csv" or anything else).
CorpusFormat corpus_format_for(const std::filesystem::path& path);

/// Reads a corpus file. Rows that break a record invariant (negative LOS,
/// blank text, label outside {0,1}) are moved to the rejection report.
/// Throws IoError if the file cannot be read, ValidationError on a missing
/// mandatory column, unparsable content or a duplicate note_id.
LoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Same as load_corpus but over in-memory content.
LoadResult parse_corpus(std::string_view content, CorpusFormat format);

void write_corpus_jsonl(const std::filesystem::path& path,
                        const std::vector<NoteRecord>& records);

// ---------------------------------------------------------------------------
// Length-of-stay labels

enum class ThresholdMode { median, fixed };

struct CohortConfig {
  ThresholdMode threshold_mode = ThresholdMode::median;
  std::optional<double> fixed_threshold_days;
  std::uint64_t seed = 0;
};

/// Lower median of the LOS values, or the fixed threshold.
double los_threshold(const std::vector<NoteRecord>& records, const CohortConfig& config);

/// label = 1 iff los_days is strictly above the threshold.
std::vector<NoteRecord> binarize_los(std::vector<NoteRecord> records,
                                     const CohortConfig& config);

// ---------------------------------------------------------------------------
// Preprocessing

struct TokenizedNote {
  std::string note_id;
  std::vector<std::string> tokens;
  std::vector<ByteSpan> token_spans;
};

struct PreprocessOptions {
  // ECMAScript regexes; any line where one matches (std::regex_search) is
  // dropped before tokenization.
  std::vector<std::string> boilerplate_patterns;
};

/// Throws ValidationError("empty after filtering") if no token survives.
TokenizedNote preprocess(const NoteRecord& record, const PreprocessOptions& options = {});

/// Tokenizes already-normalized text (e.g. a distilled keyword string).
TokenizedNote tokenize_note(std::string note_id, std::string_view text);

// ---------------------------------------------------------------------------
// Cross-validation folds

struct Fold {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// Stratified k-fold split. Every record needs a label; each class needs at
/// least k members. Ids within a fold keep corpus order.
std::vector<Fold> stratified_folds(const std::vector<NoteRecord>& records, std::size_t k,
                                   std::uint64_t seed);

}  // namespace ttxai
