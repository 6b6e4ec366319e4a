#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ttxai/error.hpp"

namespace ttxai {

struct PromptConfig {
  double temperature = 0.5;
  std::size_t repeats = 5;
  std::string system_role = "Clinical Urologist";
  std::string endpoint;  // full URL of the chat-completion route
  std::string model_name;
  std::chrono::milliseconds timeout{120000};
  double judge_temperature = 0.0;
  std::size_t sheet_cases = 10;
  std::size_t max_notes = 20;
  std::size_t keyword_count = 20;  // keyphrases in the "Key Clinical Findings" line

  void validate() const;
};

/// Reads TTXAI_LLM_ENDPOINT / TTXAI_LLM_MODEL into empty fields.
void apply_llm_env(PromptConfig& config);

enum class PromptKind { full_text, hybrid };

std::string_view to_string(PromptKind kind);
PromptKind parse_prompt_kind(std::string_view name);

std::string build_full_text_prompt(std::string_view note_text,
                                   std::string_view system_role = "Clinical Urologist");
std::string build_hybrid_prompt(std::string_view keywords, std::string_view note_text,
                                std::string_view system_role = "Clinical Urologist");
std::string build_judge_prompt(std::string_view explanation_text);
std::string build_summary_prompt(std::string_view keywords, std::string_view reasoning,
                                 std::string_view system_role = "Clinical Urologist");

/// Thrown when the endpoint cannot be reached at all (connection refused,
/// timeout), as opposed to answering badly.
class EndpointUnreachable : public BackendError {
 public:
  using BackendError::BackendError;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt, double temperature) const = 0;
};

/// POSTs {"model", "messages": [{"role": "user", "content"}], "temperature"}
/// and reads choices[0].message.content.
class HttpChatClient : public LlmClient {
 public:
  HttpChatClient(std::string endpoint, std::string model, std::chrono::milliseconds timeout);
  std::string complete(const std::string& prompt, double temperature) const override;

 private:
  std::string base_;
  std::string path_;
  std::string model_;
  std::chrono::milliseconds timeout_;
};

/// In-process client backed by a function; used for tests and offline runs.
class FunctionLlmClient : public LlmClient {
 public:
  using Fn = std::function<std::string(const std::string& prompt, double temperature)>;
  explicit FunctionLlmClient(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const std::string& prompt, double temperature) const override {
    return fn_(prompt, temperature);
  }

 private:
  Fn fn_;
};

/// Deterministic canned answers keyed on the prompt shape: a score for judge
/// prompts, bullets for summary prompts, numbered steps otherwise.
std::string mock_llm_response(const std::string& prompt, double temperature);

/// Chat-completion server on 127.0.0.1 speaking the HttpChatClient schema.
class MockChatServer {
 public:
  using Responder = std::function<std::string(const std::string& prompt, double temperature)>;
  explicit MockChatServer(Responder responder = mock_llm_response);
  ~MockChatServer();
  MockChatServer(const MockChatServer&) = delete;
  MockChatServer& operator=(const MockChatServer&) = delete;

  int port() const;
  std::string endpoint() const;  // http://127.0.0.1:<port>/v1/chat/completions
  std::size_t requests() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ReasoningRun {
  std::string note_id;
  PromptKind prompt_kind = PromptKind::full_text;
  std::size_t run_index = 0;
  std::string response_text;
  std::string timestamp;  // ISO-8601 UTC
  bool failed = false;
  bool retried = false;
  std::string error;
};

struct JudgeScore {
  std::string note_id;
  PromptKind prompt_kind = PromptKind::full_text;
  std::size_t run_index = 0;
  int score = 0;
};

/// Appends JSON lines to one file; safe to share between threads.
class RunLog {
 public:
  explicit RunLog(const std::filesystem::path& path);
  void append(const ReasoningRun& run);
  void append(const JudgeScore& score);

 private:
  void write_line(const std::string& line);
  std::mutex mutex_;
  std::ofstream out_;
  std::filesystem::path path_;
};

std::string to_json_line(const ReasoningRun& run);
std::string to_json_line(const JudgeScore& score);

/// `repeats` sequential completions. A failing call is retried once; a
/// second failure is recorded as a failed run. Throws EndpointUnreachable if
/// the retry of a run still cannot reach the endpoint.
std::vector<ReasoningRun> run_repeats(const std::string& note_id, PromptKind kind,
                                      const std::string& prompt, const PromptConfig& config,
                                      const LlmClient& client, RunLog* log = nullptr);

/// First integer in 1..5 in the text. Throws ValidationError("unparsable
/// judge output") otherwise.
int parse_judge_score(std::string_view text);

JudgeScore judge_score(const ReasoningRun& run, const PromptConfig& config,
                       const LlmClient& client);

/// Lines starting with "-", "*", a bullet sign or "<digits>." / "<digits>)".
std::size_t count_bullets(std::string_view text);

/// Asks for at most three bullets; reprompts once, then throws
/// ValidationError.
std::string summarize_bullets(std::string_view keywords, std::string_view reasoning,
                              const PromptConfig& config, const LlmClient& client);

struct ScoreSummary {
  PromptKind prompt_kind = PromptKind::full_text;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
  bool single_sample = false;  // std undefined, reported as 0.00

  /// "4.00 ± 0.71"
  std::string formatted() const;
};

/// Grouped by prompt kind in enum order; kinds with no scores are omitted.
std::vector<ScoreSummary> aggregate_scores(std::span<const JudgeScore> scores);

std::string format_2dp(double value);

struct ReasoningCase {
  std::string note_id;
  std::string note_text;
  std::string keywords;
};

struct ReasoningResult {
  std::vector<ReasoningRun> runs;
  std::vector<JudgeScore> scores;
  std::vector<ScoreSummary> summaries;
};

/// Both prompt kinds for every case; a case without keywords only gets the
/// full-text runs. Notes run concurrently up to `workers`; runs for
/// one (note, kind) are sequential. All runs are logged before judging.
ReasoningResult run_reasoning(std::span<const ReasoningCase> cases, const PromptConfig& config,
                              const LlmClient& client, RunLog& log, std::size_t workers);

struct ScoreSheetEntry {
  std::string note_id;
  std::string full_text_bullets;
  std::string hybrid_bullets;
};

/// Blinded sheet (case_id, method_label, bullets) and its key (case_id,
/// method_label, prompt_kind, note_id). Which method is "A" is drawn per
/// case from (seed, note_id).
void write_score_sheet(std::span<const ScoreSheetEntry> entries, std::uint64_t seed,
                       const std::filesystem::path& sheet_path,
                       const std::filesystem::path& key_path);

}  // namespace ttxai
