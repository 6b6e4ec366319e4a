#include "ttxai/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ttxai/error.hpp"
#include "ttxai/rng.hpp"

namespace ttxai {

using json = nlohmann::json;

namespace {

constexpr const char* kMandatory[] = {"note_id", "subject_id", "hadm_id", "text", "los_days"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading: " + path.string());
  return ss.str();
}

// Validates a candidate row; returns the rejection reason or empty.
std::string check_record(const NoteRecord& r) {
  if (r.note_id.empty()) return "empty note_id";
  if (!std::isfinite(r.los_days)) return "invalid LOS";
  if (r.los_days < 0.0) return "negative LOS";
  if (trim(r.text).empty()) return "empty text";
  return {};
}

std::string json_id(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  throw ValidationError("identifier must be a string or integer");
}

// RFC 4180: quoted fields may hold commas, doubled quotes and newlines.
std::vector<std::vector<std::string>> parse_csv_rows(std::string_view s) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < s.size() && s[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw ValidationError("CSV: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

LoadResult parse_jsonl(std::string_view content) {
  LoadResult out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const auto line = trim(content.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) {
      if (end == content.size()) break;
      continue;
    }
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError("JSONL line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!row.is_object()) {
      throw ValidationError("JSONL line " + std::to_string(line_no) + ": not an object");
    }
    for (const char* key : kMandatory) {
      if (!row.contains(key)) {
        throw ValidationError("missing mandatory column '" + std::string(key) +
                              "' at line " + std::to_string(line_no));
      }
    }
    NoteRecord r;
    r.note_id = json_id(row["note_id"]);
    r.subject_id = json_id(row["subject_id"]);
    r.hadm_id = json_id(row["hadm_id"]);
    std::string reason;
    if (!row["text"].is_string()) {
      reason = "text is not a string";
    } else {
      r.text = row["text"].get<std::string>();
    }
    if (reason.empty()) {
      if (!row["los_days"].is_number()) {
        reason = "invalid LOS";
      } else {
        r.los_days = row["los_days"].get<double>();
      }
    }
    if (reason.empty() && row.contains("label") && !row["label"].is_null()) {
      const auto& lab = row["label"];
      if (lab.is_number_integer() && (lab.get<long long>() == 0 || lab.get<long long>() == 1)) {
        r.label = static_cast<int>(lab.get<long long>());
      } else {
        reason = "label not in {0,1}";
      }
    }
    if (reason.empty()) reason = check_record(r);
    if (reason.empty()) {
      out.records.push_back(std::move(r));
    } else {
      out.rejections.push_back({line_no, r.note_id, reason});
    }
    if (end == content.size()) break;
  }
  return out;
}

LoadResult parse_csv(std::string_view content) {
  LoadResult out;
  if (trim(content).empty()) return out;
  auto rows = parse_csv_rows(content);
  if (rows.empty()) return out;
  const auto& header = rows.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
  for (const char* key : kMandatory) {
    if (!col.count(key)) {
      throw ValidationError("missing mandatory column '" + std::string(key) + "'");
    }
  }
  const bool has_label = col.count("label") > 0;
  for (std::size_t ri = 1; ri < rows.size(); ++ri) {
    const auto& row = rows[ri];
    auto cell = [&](const char* key) -> std::string {
      const auto idx = col.at(key);
      return idx < row.size() ? row[idx] : std::string();
    };
    NoteRecord r;
    r.note_id = std::string(trim(cell("note_id")));
    r.subject_id = std::string(trim(cell("subject_id")));
    r.hadm_id = std::string(trim(cell("hadm_id")));
    r.text = cell("text");
    std::string reason;
    const std::string los = std::string(trim(cell("los_days")));
    try {
      std::size_t used = 0;
      r.los_days = std::stod(los, &used);
      if (used != los.size()) reason = "invalid LOS";
    } catch (const std::exception&) {
      reason = "invalid LOS";
    }
    if (reason.empty() && has_label) {
      const auto lab = trim(cell("label"));
      if (lab == "0") {
        r.label = 0;
      } else if (lab == "1") {
        r.label = 1;
      } else if (!(lab.empty() || lab == "null")) {
        reason = "label not in {0,1}";
      }
    }
    if (reason.empty()) reason = check_record(r);
    if (reason.empty()) {
      out.records.push_back(std::move(r));
    } else {
      out.rejections.push_back({ri, r.note_id, reason});
    }
  }
  return out;
}

void check_unique(const LoadResult& result) {
  std::set<std::string> seen;
  for (const auto& r : result.records) {
    if (!seen.insert(r.note_id).second) throw ValidationError("duplicate note_id: " + r.note_id);
  }
  for (const auto& r : result.rejections) {
    if (!r.note_id.empty() && !seen.insert(r.note_id).second) {
      throw ValidationError("duplicate note_id: " + r.note_id);
    }
  }
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "csv") return CorpusFormat::csv;
  throw ValidationError("unknown corpus format: " + std::string(name));
}

CorpusFormat corpus_format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
}

LoadResult parse_corpus(std::string_view content, CorpusFormat format) {
  LoadResult result = format == CorpusFormat::jsonl ? parse_jsonl(content) : parse_csv(content);
  check_unique(result);
  return result;
}

LoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  return parse_corpus(read_file(path), format);
}

void write_corpus_jsonl(const std::filesystem::path& path,
                        const std::vector<NoteRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  for (const auto& r : records) {
    json row = {{"note_id", r.note_id},   {"subject_id", r.subject_id},
                {"hadm_id", r.hadm_id},   {"text", r.text},
                {"los_days", r.los_days}, {"label", nullptr}};
    if (r.label) row["label"] = *r.label;
    out << row.dump() << '\n';
  }
  if (!out) throw IoError("error while writing: " + path.string());
}

double los_threshold(const std::vector<NoteRecord>& records, const CohortConfig& config) {
  if (config.threshold_mode == ThresholdMode::fixed) {
    if (!config.fixed_threshold_days) {
      throw ValidationError("fixed threshold mode requires fixed_threshold_days");
    }
    return *config.fixed_threshold_days;
  }
  if (config.fixed_threshold_days) {
    throw ValidationError("fixed_threshold_days is only valid in fixed threshold mode");
  }
  if (records.empty()) throw ValidationError("empty corpus: median undefined");
  std::vector<double> los;
  los.reserve(records.size());
  for (const auto& r : records) los.push_back(r.los_days);
  const auto mid = los.begin() + static_cast<std::ptrdiff_t>((los.size() - 1) / 2);
  std::nth_element(los.begin(), mid, los.end());
  return *mid;
}

std::vector<NoteRecord> binarize_los(std::vector<NoteRecord> records,
                                     const CohortConfig& config) {
  const double threshold = los_threshold(records, config);
  for (auto& r : records) r.label = r.los_days > threshold ? 1 : 0;
  return records;
}

TokenizedNote tokenize_note(std::string note_id, std::string_view text) {
  TokenizedNote note;
  note.note_id = std::move(note_id);
  for (auto& t : tokenize(text)) {
    note.tokens.push_back(std::move(t.text));
    note.token_spans.push_back(t.span);
  }
  return note;
}

TokenizedNote preprocess(const NoteRecord& record, const PreprocessOptions& options) {
  std::vector<std::regex> patterns;
  patterns.reserve(options.boilerplate_patterns.size());
  for (const auto& p : options.boilerplate_patterns) {
    try {
      patterns.emplace_back(p, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw ValidationError("invalid boilerplate pattern '" + p + "': " + e.what());
    }
  }
  TokenizedNote note;
  note.note_id = record.note_id;
  const std::string_view text = record.text;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const bool boilerplate = std::any_of(patterns.begin(), patterns.end(), [&](const auto& re) {
      return std::regex_search(line.begin(), line.end(), re);
    });
    if (!boilerplate) {
      for (auto& t : tokenize(line)) {
        note.tokens.push_back(std::move(t.text));
        note.token_spans.push_back({t.span.begin + start, t.span.end + start});
      }
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  if (note.tokens.empty()) {
    throw ValidationError("note " + record.note_id + ": empty after filtering");
  }
  return note;
}

std::vector<Fold> stratified_folds(const std::vector<NoteRecord>& records, std::size_t k,
                                   std::uint64_t seed) {
  if (k < 2) throw ValidationError("stratified_folds: k must be >= 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].label) {
      throw ValidationError("stratified_folds: record " + records[i].note_id + " has no label");
    }
    by_class[*records[i].label].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < k) {
      throw ValidationError("stratified_folds: class " + std::to_string(c) + " has " +
                            std::to_string(by_class[c].size()) + " members, fewer than k=" +
                            std::to_string(k));
    }
  }
  // Deal each shuffled class round-robin, continuing the fold cursor across
  // classes so fold sizes differ by at most one.
  std::vector<std::size_t> fold_of(records.size());
  Rng rng(mix_seed(seed, 0x666f6c6473ULL));
  std::size_t cursor = 0;
  for (int c = 1; c >= 0; --c) {
    auto members = by_class[c];
    rng.shuffle(members);
    for (std::size_t idx : members) {
      fold_of[idx] = cursor;
      cursor = (cursor + 1) % k;
    }
  }
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      auto& dst = fold_of[i] == f ? folds[f].test_ids : folds[f].train_ids;
      dst.push_back(records[i].note_id);
    }
  }
  return folds;
}

}  // namespace ttxai
