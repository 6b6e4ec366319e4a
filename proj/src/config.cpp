#include "ttxai/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "ttxai/error.hpp"
#include "ttxai/parallel.hpp"

namespace ttxai {

namespace {

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : s_(text) {}

  TomlDocument parse() {
    TomlDocument doc;
    std::string table;
    doc.tables[table];
    while (true) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        ++pos_;
        skip_ws();
        table = parse_key();
        skip_ws();
        expect(']');
        if (doc.tables.count(table) && table_seen_.count(table)) fail("duplicate table [" + table + "]");
        table_seen_.insert(table);
        doc.tables[table];
      } else {
        const std::string key = parse_key();
        skip_ws();
        expect('=');
        skip_ws();
        TomlValue value = parse_value();
        auto& t = doc.tables[table];
        if (t.count(key)) fail("duplicate key '" + key + "'");
        t.emplace(key, std::move(value));
      }
      end_of_line();
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("config line " + std::to_string(line_) + ": " + what);
  }
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_ws() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!at_end() && peek() != '\n') ++pos_;
    }
  }
  void newline() {
    if (peek() == '\r') ++pos_;
    if (peek() == '\n') {
      ++pos_;
      ++line_;
    }
  }
  void skip_blank_lines() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        newline();
        continue;
      }
      return;
    }
  }
  // Whitespace, comments and newlines inside arrays.
  void skip_array_space() { skip_blank_lines(); }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (at_end()) return;
    if (peek() != '\n' && peek() != '\r') fail("unexpected trailing characters");
    newline();
  }

  std::string parse_key() {
    if (peek() == '"') return parse_basic_string();
    std::string key;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                         peek() == '-')) {
      key.push_back(s_[pos_++]);
    }
    if (key.empty()) fail("expected a key");
    if (peek() == '.') fail("dotted keys are not supported");
    return key;
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  std::string parse_basic_string() {
    expect('"');
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (at_end()) fail("unterminated escape");
      const char e = s_[pos_++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'u':
        case 'U': {
          const std::size_t len = e == 'u' ? 4 : 8;
          if (pos_ + len > s_.size()) fail("short unicode escape");
          std::uint32_t cp = 0;
          const auto* first = s_.data() + pos_;
          const auto [ptr, ec] = std::from_chars(first, first + len, cp, 16);
          if (ec != std::errc() || ptr != first + len) fail("bad unicode escape");
          pos_ += len;
          append_utf8(out, cp);
          break;
        }
        default:
          fail(std::string("unknown escape \\") + e);
      }
    }
  }

  std::string parse_literal_string() {
    expect('\'');
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '\'') return out;
      out.push_back(c);
    }
  }

  TomlValue parse_value() {
    TomlValue value;
    value.line = line_;
    const char c = peek();
    if (c == '"') {
      value.v = parse_basic_string();
    } else if (c == '\'') {
      value.v = parse_literal_string();
    } else if (c == '[') {
      ++pos_;
      TomlArray items;
      skip_array_space();
      while (peek() != ']') {
        items.push_back(parse_value());
        skip_array_space();
        if (peek() == ',') {
          ++pos_;
          skip_array_space();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      ++pos_;
      value.v = std::move(items);
    } else {
      std::string token;
      while (!at_end() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' &&
             peek() != ']' && peek() != '#') {
        token.push_back(s_[pos_++]);
      }
      value.v = parse_scalar(token);
    }
    return value;
  }

  std::variant<bool, std::int64_t, double, std::string, TomlArray> parse_scalar(
      const std::string& token) {
    if (token == "true") return true;
    if (token == "false") return false;
    if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    if (token == "nan" || token == "+nan" || token == "-nan") {
      return std::numeric_limits<double>::quiet_NaN();
    }
    std::string digits;
    for (std::size_t i = 0; i < token.size(); ++i) {
      if (token[i] != '_') {
        digits.push_back(token[i]);
      } else if (i == 0 || i + 1 == token.size() || !std::isdigit(static_cast<unsigned char>(token[i - 1])) ||
                 !std::isdigit(static_cast<unsigned char>(token[i + 1]))) {
        fail("misplaced '_' in number '" + token + "'");
      }
    }
    if (digits.empty()) fail("expected a value");
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    const char* first = digits.data() + (digits[0] == '+' ? 1 : 0);
    const char* last = digits.data() + digits.size();
    if (is_float) {
      double d = 0;
      const auto [ptr, ec] = std::from_chars(first, last, d);
      if (ec != std::errc() || ptr != last) fail("invalid float '" + token + "'");
      return d;
    }
    std::int64_t n = 0;
    const auto [ptr, ec] = std::from_chars(first, last, n);
    if (ec != std::errc() || ptr != last) fail("invalid value '" + token + "'");
    return n;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::set<std::string> table_seen_;
};

// ---------------------------------------------------------------------------

std::string where(const std::string& table, const std::string& key) {
  return table.empty() ? key : "[" + table + "]." + key;
}

struct Binder {
  std::string table;
  std::string key;
  const TomlValue* value;

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("config line " + std::to_string(value->line) + ": " + where(table, key) +
                          " " + what);
  }
  std::int64_t integer() const {
    if (const auto* i = std::get_if<std::int64_t>(&value->v)) return *i;
    fail("must be an integer");
  }
  std::size_t count() const {
    const auto i = integer();
    if (i < 0) fail("must be >= 0");
    return static_cast<std::size_t>(i);
  }
  std::uint64_t u64() const {
    const auto i = integer();
    if (i < 0) fail("must be >= 0");
    return static_cast<std::uint64_t>(i);
  }
  double real() const {
    if (const auto* d = std::get_if<double>(&value->v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&value->v)) return static_cast<double>(*i);
    fail("must be a number");
  }
  bool boolean() const {
    if (const auto* b = std::get_if<bool>(&value->v)) return *b;
    fail("must be true or false");
  }
  std::string string() const {
    if (const auto* s = std::get_if<std::string>(&value->v)) return *s;
    fail("must be a string");
  }
  std::vector<std::string> strings() const {
    const auto* a = std::get_if<TomlArray>(&value->v);
    if (!a) fail("must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : *a) {
      const auto* s = std::get_if<std::string>(&item.v);
      if (!s) fail("must be an array of strings");
      out.push_back(*s);
    }
    return out;
  }
};

using Handlers = std::map<std::string, std::function<void(const Binder&)>>;

RankBy parse_rank_by(const Binder& b) {
  const auto s = b.string();
  if (s == "signed") return RankBy::signed_weight;
  if (s == "absolute") return RankBy::absolute;
  b.fail("must be \"signed\" or \"absolute\"");
}

std::string_view rank_by_name(RankBy r) { return r == RankBy::absolute ? "absolute" : "signed"; }

ClassifierKind parse_classifier_kind(const Binder& b) {
  const auto s = b.string();
  if (s == "builtin") return ClassifierKind::builtin;
  if (s == "subprocess") return ClassifierKind::subprocess;
  if (s == "http") return ClassifierKind::http;
  b.fail("must be \"builtin\", \"subprocess\" or \"http\"");
}

std::map<std::string, Handlers> handlers_for(RunConfig& c) {
  std::map<std::string, Handlers> h;
  h[""] = {
      {"seed", [&](const Binder& b) { c.seed = b.u64(); }},
      {"workers", [&](const Binder& b) { c.workers = b.count(); }},
  };
  h["cohort"] = {
      {"threshold_mode",
       [&](const Binder& b) {
         const auto s = b.string();
         if (s == "median") {
           c.cohort.threshold_mode = ThresholdMode::median;
         } else if (s == "fixed") {
           c.cohort.threshold_mode = ThresholdMode::fixed;
         } else {
           b.fail("must be \"median\" or \"fixed\"");
         }
       }},
      {"fixed_threshold_days", [&](const Binder& b) { c.cohort.fixed_threshold_days = b.real(); }},
      {"folds", [&](const Binder& b) { c.folds = b.count(); }},
  };
  h["rakun"] = {
      {"max_candidates", [&](const Binder& b) { c.rakun.max_candidates = b.count(); }},
      {"merge_threshold", [&](const Binder& b) { c.rakun.merge_threshold = b.real(); }},
      {"alpha", [&](const Binder& b) { c.rakun.alpha = b.real(); }},
      {"min_token_length", [&](const Binder& b) { c.rakun.min_token_length = b.count(); }},
      {"retain_top", [&](const Binder& b) { c.rakun.retain_top = b.count(); }},
      {"max_phrase_len", [&](const Binder& b) { c.rakun.max_phrase_len = b.count(); }},
      {"phrase_pool_fraction", [&](const Binder& b) { c.rakun.phrase_pool_fraction = b.real(); }},
  };
  h["entities"] = {
      {"gazetteer", [&](const Binder& b) { c.entities.gazetteer = b.string(); }},
      {"excluded_categories",
       [&](const Binder& b) { c.entities.excluded_categories = b.strings(); }},
  };
  h["classifier"] = {
      {"kind", [&](const Binder& b) { c.classifier.kind = parse_classifier_kind(b); }},
      {"endpoint", [&](const Binder& b) { c.classifier.endpoint = b.string(); }},
      {"model_path", [&](const Binder& b) { c.classifier.model_path = b.string(); }},
      {"max_tokens", [&](const Binder& b) { c.classifier.max_tokens = b.count(); }},
      {"timeout_s", [&](const Binder& b) { c.classifier.timeout_s = b.real(); }},
      {"l2", [&](const Binder& b) { c.classifier.train.l2 = b.real(); }},
      {"epochs", [&](const Binder& b) { c.classifier.train.epochs = b.count(); }},
      {"learning_rate", [&](const Binder& b) { c.classifier.train.lr = b.real(); }},
  };
  h["surrogate"] = {
      {"n_samples", [&](const Binder& b) { c.surrogate.n_samples = b.count(); }},
      {"keep_prob", [&](const Binder& b) { c.surrogate.keep_prob = b.real(); }},
      {"kernel_width", [&](const Binder& b) { c.surrogate.kernel_width = b.real(); }},
      {"ridge_lambda", [&](const Binder& b) { c.surrogate.ridge_lambda = b.real(); }},
  };
  h["explain"] = {
      {"max_keyphrases", [&](const Binder& b) { c.explain.max_keyphrases = b.count(); }},
      {"classical_max_elements",
       [&](const Binder& b) { c.explain.classical_max_elements = b.count(); }},
      {"rank_by", [&](const Binder& b) { c.explain.rank_by = parse_rank_by(b); }},
      {"max_notes", [&](const Binder& b) { c.explain.max_notes = b.count(); }},
  };
  h["fidelity"] = {
      {"max_k", [&](const Binder& b) { c.fidelity.max_k = b.count(); }},
      {"rank_by", [&](const Binder& b) { c.fidelity.rank_by = parse_rank_by(b); }},
  };
  h["prompt"] = {
      {"temperature", [&](const Binder& b) { c.prompt.temperature = b.real(); }},
      {"repeats", [&](const Binder& b) { c.prompt.repeats = b.count(); }},
      {"system_role", [&](const Binder& b) { c.prompt.system_role = b.string(); }},
      {"endpoint", [&](const Binder& b) { c.prompt.endpoint = b.string(); }},
      {"model_name", [&](const Binder& b) { c.prompt.model_name = b.string(); }},
      {"timeout_s",
       [&](const Binder& b) {
         const double s = b.real();
         if (!(s > 0.0)) b.fail("must be > 0");
         c.prompt.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(s * 1000)));
       }},
      {"judge_temperature", [&](const Binder& b) { c.prompt.judge_temperature = b.real(); }},
      {"sheet_cases", [&](const Binder& b) { c.prompt.sheet_cases = b.count(); }},
      {"max_notes", [&](const Binder& b) { c.prompt.max_notes = b.count(); }},
      {"keyword_count", [&](const Binder& b) { c.prompt.keyword_count = b.count(); }},
  };
  h["synthetic"] = {
      {"n_notes", [&](const Binder& b) { c.synthetic.n_notes = b.count(); }},
      {"filler_vocab_size", [&](const Binder& b) { c.synthetic.filler_vocab_size = b.count(); }},
      {"signal_tokens", [&](const Binder& b) { c.synthetic.signal_tokens = b.strings(); }},
      {"note_length", [&](const Binder& b) { c.synthetic.note_length = b.count(); }},
      {"label_rule_threshold",
       [&](const Binder& b) { c.synthetic.label_rule_threshold = b.count(); }},
      {"signal_inject_prob", [&](const Binder& b) { c.synthetic.signal_inject_prob = b.real(); }},
      {"signal_repeats", [&](const Binder& b) { c.synthetic.signal_repeats = b.count(); }},
  };
  h["bench"] = {
      {"modality_max_tokens", [&](const Binder& b) { c.bench.modality_max_tokens = b.count(); }},
      {"fidelity_max_notes", [&](const Binder& b) { c.bench.fidelity_max_notes = b.count(); }},
      {"recovery_k", [&](const Binder& b) { c.bench.recovery_k = b.count(); }},
      {"recovery_notes", [&](const Binder& b) { c.bench.recovery_notes = b.count(); }},
      {"agreement_notes", [&](const Binder& b) { c.bench.agreement_notes = b.count(); }},
      {"agreement_max_focus", [&](const Binder& b) { c.bench.agreement_max_focus = b.count(); }},
      {"focus_keyphrases", [&](const Binder& b) { c.bench.focus_keyphrases = b.count(); }},
  };
  h["io"] = {
      {"corpus", [&](const Binder& b) { c.io.corpus = b.string(); }},
      {"format", [&](const Binder& b) { c.io.format = b.string(); }},
      {"out_dir", [&](const Binder& b) { c.io.out_dir = b.string(); }},
      {"boilerplate_patterns", [&](const Binder& b) { c.io.boilerplate_patterns = b.strings(); }},
  };
  return h;
}

// Shortest round-tripping rendering that still reads back as a float.
std::string toml_float(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string toml_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
  return out;
}

std::string toml_strings(const std::vector<std::string>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += toml_string(v[i]);
  }
  return out + "]";
}

}  // namespace

TomlDocument parse_toml(std::string_view text) { return TomlParser(text).parse(); }

void RunConfig::propagate_seed() {
  cohort.seed = seed;
  surrogate.seed = seed;
  synthetic.seed = seed;
  classifier.train.seed = seed;
}

void RunConfig::validate() const {
  if (folds < 2) throw ValidationError("cohort.folds must be >= 2");
  if (cohort.threshold_mode == ThresholdMode::fixed && !cohort.fixed_threshold_days) {
    throw ValidationError("cohort.threshold_mode = \"fixed\" needs fixed_threshold_days");
  }
  rakun.validate();
  surrogate.validate();
  fidelity.validate();
  prompt.validate();
  synthetic.validate();
  for (const auto& c : entities.excluded_categories) parse_entity_category(c);
  if (classifier.max_tokens < 1) throw ValidationError("classifier.max_tokens must be >= 1");
  if (!(classifier.timeout_s > 0.0)) throw ValidationError("classifier.timeout_s must be > 0");
  if (!(classifier.train.lr > 0.0)) throw ValidationError("classifier.learning_rate must be > 0");
  if (!(classifier.train.l2 >= 0.0)) throw ValidationError("classifier.l2 must be >= 0");
  if (explain.max_keyphrases < 1) throw ValidationError("explain.max_keyphrases must be >= 1");
  if (explain.classical_max_elements < 1) {
    throw ValidationError("explain.classical_max_elements must be >= 1");
  }
  if (bench.recovery_k < 1) throw ValidationError("bench.recovery_k must be >= 1");
  if (bench.agreement_max_focus < 1 || bench.agreement_max_focus > 16) {
    throw ValidationError("bench.agreement_max_focus must be in [1, 16]");
  }
  if (!io.format.empty()) parse_corpus_format(io.format);
}

std::size_t RunConfig::resolved_workers() const {
  return workers == 0 ? default_workers() : workers;
}

RunConfig parse_run_config(std::string_view toml) {
  const auto doc = parse_toml(toml);
  RunConfig config;
  auto handlers = handlers_for(config);
  for (const auto& [table, entries] : doc.tables) {
    const auto h = handlers.find(table);
    if (h == handlers.end()) throw ValidationError("unknown config section [" + table + "]");
    for (const auto& [key, value] : entries) {
      const auto k = h->second.find(key);
      if (k == h->second.end()) {
        throw ValidationError("config line " + std::to_string(value.line) +
                              ": unknown config key " + where(table, key));
      }
      k->second(Binder{table, key, &value});
    }
  }
  config.propagate_seed();
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_run_config(buf.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string to_toml(const RunConfig& c) {
  std::ostringstream o;
  o << "seed = " << c.seed << "\n";
  o << "\n[cohort]\n";
  o << "threshold_mode = "
    << toml_string(c.cohort.threshold_mode == ThresholdMode::fixed ? "fixed" : "median") << "\n";
  if (c.cohort.fixed_threshold_days) {
    o << "fixed_threshold_days = " << toml_float(*c.cohort.fixed_threshold_days) << "\n";
  }
  o << "folds = " << c.folds << "\n";
  o << "\n[rakun]\n";
  o << "max_candidates = " << c.rakun.max_candidates << "\n";
  o << "merge_threshold = " << toml_float(c.rakun.merge_threshold) << "\n";
  o << "alpha = " << toml_float(c.rakun.alpha) << "\n";
  o << "min_token_length = " << c.rakun.min_token_length << "\n";
  o << "retain_top = " << c.rakun.retain_top << "\n";
  o << "max_phrase_len = " << c.rakun.max_phrase_len << "\n";
  o << "phrase_pool_fraction = " << toml_float(c.rakun.phrase_pool_fraction) << "\n";
  o << "\n[entities]\n";
  o << "gazetteer = " << toml_string(c.entities.gazetteer) << "\n";
  o << "excluded_categories = " << toml_strings(c.entities.excluded_categories) << "\n";
  o << "\n[classifier]\n";
  o << "kind = " << toml_string(to_string(c.classifier.kind)) << "\n";
  o << "endpoint = " << toml_string(c.classifier.endpoint) << "\n";
  o << "model_path = " << toml_string(c.classifier.model_path) << "\n";
  o << "max_tokens = " << c.classifier.max_tokens << "\n";
  o << "timeout_s = " << toml_float(c.classifier.timeout_s) << "\n";
  o << "l2 = " << toml_float(c.classifier.train.l2) << "\n";
  o << "epochs = " << c.classifier.train.epochs << "\n";
  o << "learning_rate = " << toml_float(c.classifier.train.lr) << "\n";
  o << "\n[surrogate]\n";
  o << "n_samples = " << c.surrogate.n_samples << "\n";
  o << "keep_prob = " << toml_float(c.surrogate.keep_prob) << "\n";
  o << "kernel_width = " << toml_float(c.surrogate.kernel_width) << "\n";
  o << "ridge_lambda = " << toml_float(c.surrogate.ridge_lambda) << "\n";
  o << "\n[explain]\n";
  o << "max_keyphrases = " << c.explain.max_keyphrases << "\n";
  o << "classical_max_elements = " << c.explain.classical_max_elements << "\n";
  o << "rank_by = " << toml_string(rank_by_name(c.explain.rank_by)) << "\n";
  o << "max_notes = " << c.explain.max_notes << "\n";
  o << "\n[fidelity]\n";
  o << "max_k = " << c.fidelity.max_k << "\n";
  o << "rank_by = " << toml_string(rank_by_name(c.fidelity.rank_by)) << "\n";
  o << "\n[prompt]\n";
  o << "temperature = " << toml_float(c.prompt.temperature) << "\n";
  o << "repeats = " << c.prompt.repeats << "\n";
  o << "system_role = " << toml_string(c.prompt.system_role) << "\n";
  o << "endpoint = " << toml_string(c.prompt.endpoint) << "\n";
  o << "model_name = " << toml_string(c.prompt.model_name) << "\n";
  o << "timeout_s = " << toml_float(static_cast<double>(c.prompt.timeout.count()) / 1000.0) << "\n";
  o << "judge_temperature = " << toml_float(c.prompt.judge_temperature) << "\n";
  o << "sheet_cases = " << c.prompt.sheet_cases << "\n";
  o << "max_notes = " << c.prompt.max_notes << "\n";
  o << "keyword_count = " << c.prompt.keyword_count << "\n";
  o << "\n[synthetic]\n";
  o << "n_notes = " << c.synthetic.n_notes << "\n";
  o << "filler_vocab_size = " << c.synthetic.filler_vocab_size << "\n";
  o << "signal_tokens = " << toml_strings(c.synthetic.signal_tokens) << "\n";
  o << "note_length = " << c.synthetic.note_length << "\n";
  o << "label_rule_threshold = " << c.synthetic.label_rule_threshold << "\n";
  o << "signal_inject_prob = " << toml_float(c.synthetic.signal_inject_prob) << "\n";
  o << "signal_repeats = " << c.synthetic.signal_repeats << "\n";
  o << "\n[bench]\n";
  o << "modality_max_tokens = " << c.bench.modality_max_tokens << "\n";
  o << "fidelity_max_notes = " << c.bench.fidelity_max_notes << "\n";
  o << "recovery_k = " << c.bench.recovery_k << "\n";
  o << "recovery_notes = " << c.bench.recovery_notes << "\n";
  o << "agreement_notes = " << c.bench.agreement_notes << "\n";
  o << "agreement_max_focus = " << c.bench.agreement_max_focus << "\n";
  o << "focus_keyphrases = " << c.bench.focus_keyphrases << "\n";
  o << "\n[io]\n";
  o << "corpus = " << toml_string(c.io.corpus) << "\n";
  o << "format = " << toml_string(c.io.format) << "\n";
  o << "out_dir = " << toml_string(c.io.out_dir) << "\n";
  o << "boilerplate_patterns = " << toml_strings(c.io.boilerplate_patterns) << "\n";
  return o.str();
}

void write_config_snapshot(const std::filesystem::path& dir, const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto path = dir / kConfigSnapshotName;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path.string());
  out << to_toml(config);
  if (!out) throw IoError("error while writing: " + path.string());
}

}  // namespace ttxai
