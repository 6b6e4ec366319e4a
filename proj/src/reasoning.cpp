#include "ttxai/reasoning.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <map>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ttxai/parallel.hpp"
#include "ttxai/rng.hpp"
#include "ttxai/text.hpp"

namespace ttxai {

using json = nlohmann::json;

namespace {

constexpr std::string_view kReasoningInstruction = "Provide 1-3 reasoning steps.";
constexpr std::string_view kHybridInstruction =
    "Prioritize the key clinical findings when interpreting the full note.";
constexpr std::string_view kJudgeInstruction =
    "Rate the clinical explanation below for clarity and clinical relevance on a scale from 1 "
    "(poor) to 5 (excellent). Reply with a single integer.";
constexpr std::string_view kSummaryInstruction =
    "Summarize the reasoning below in at most 3 clinically focused bullet points, using both the "
    "extracted keywords and the original reasoning. Start every bullet with \"- \".";

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void PromptConfig::validate() const {
  if (repeats < 1) throw ValidationError("prompt: repeats must be >= 1");
  if (!(temperature >= 0.0)) throw ValidationError("prompt: temperature must be >= 0");
  if (!(judge_temperature >= 0.0)) throw ValidationError("prompt: judge_temperature must be >= 0");
  if (timeout.count() <= 0) throw ValidationError("prompt: timeout must be positive");
}

void apply_llm_env(PromptConfig& config) {
  if (config.endpoint.empty()) {
    if (const char* v = std::getenv("TTXAI_LLM_ENDPOINT")) config.endpoint = v;
  }
  if (config.model_name.empty()) {
    if (const char* v = std::getenv("TTXAI_LLM_MODEL")) config.model_name = v;
  }
}

std::string_view to_string(PromptKind kind) {
  return kind == PromptKind::hybrid ? "hybrid" : "full_text";
}

PromptKind parse_prompt_kind(std::string_view name) {
  if (name == "full_text") return PromptKind::full_text;
  if (name == "hybrid") return PromptKind::hybrid;
  throw ValidationError("unknown prompt kind: " + std::string(name));
}

std::string build_full_text_prompt(std::string_view note_text, std::string_view system_role) {
  if (note_text.empty()) throw ValidationError("full-text prompt: empty note");
  std::string out;
  out.append("System: ").append(system_role).append("\n");
  out.append("Instruction: ").append(kReasoningInstruction).append("\n\n");
  out.append("Input:\nFull Clinical Note:\n").append(note_text).append("\n\n");
  out.append("Reasoning steps:");
  return out;
}

std::string build_hybrid_prompt(std::string_view keywords, std::string_view note_text,
                                std::string_view system_role) {
  if (keywords.empty()) throw ValidationError("hybrid prompt: empty keywords");
  if (note_text.empty()) throw ValidationError("hybrid prompt: empty note");
  std::string out;
  out.append("System: ").append(system_role).append("\n");
  out.append("Instruction: ").append(kReasoningInstruction).append(" ");
  out.append(kHybridInstruction).append("\n\n");
  out.append("Input:\nKey Clinical Findings: ").append(keywords).append("\n");
  out.append("Full Clinical Note: ").append(note_text).append("\n\n");
  out.append("Reasoning steps:");
  return out;
}

std::string build_judge_prompt(std::string_view explanation_text) {
  if (explanation_text.empty()) throw ValidationError("judge prompt: empty explanation");
  std::string out = "System: Clinical Evaluator\n";
  out.append("Instruction: ").append(kJudgeInstruction).append("\n\n");
  out.append("Explanation:\n").append(explanation_text).append("\n\n");
  out.append("Score:");
  return out;
}

std::string build_summary_prompt(std::string_view keywords, std::string_view reasoning,
                                 std::string_view system_role) {
  if (reasoning.empty()) throw ValidationError("summary prompt: empty reasoning");
  std::string out;
  out.append("System: ").append(system_role).append("\n");
  out.append("Instruction: ").append(kSummaryInstruction).append("\n\n");
  out.append("Extracted Keywords: ").append(keywords).append("\n\n");
  out.append("Original Reasoning:\n").append(reasoning).append("\n\n");
  out.append("Summary:");
  return out;
}

// ---------------------------------------------------------------------------

HttpChatClient::HttpChatClient(std::string endpoint, std::string model,
                               std::chrono::milliseconds timeout)
    : model_(std::move(model)), timeout_(timeout) {
  if (endpoint.empty()) {
    throw ValidationError("no LLM endpoint configured (set --llm-endpoint or TTXAI_LLM_ENDPOINT)");
  }
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw ValidationError("LLM endpoint lacks a scheme: " + endpoint);
  const auto slash = endpoint.find('/', scheme + 3);
  base_ = slash == std::string::npos ? endpoint : endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/chat/completions" : endpoint.substr(slash);
}

std::string HttpChatClient::complete(const std::string& prompt, double temperature) const {
  json request = {{"model", model_},
                  {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                  {"temperature", temperature}};
  httplib::Client client(base_);
  const auto ms = timeout_.count();
  client.set_connection_timeout(ms / 1000, (ms % 1000) * 1000);
  client.set_read_timeout(ms / 1000, (ms % 1000) * 1000);
  auto res = client.Post(path_, request.dump(), "application/json");
  if (!res) {
    throw EndpointUnreachable("LLM endpoint unreachable: " + base_ + path_ + " (" +
                              httplib::to_string(res.error()) + ")");
  }
  if (res->status != 200) {
    throw BackendError("LLM endpoint returned HTTP " + std::to_string(res->status));
  }
  try {
    const auto j = json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed LLM response: ") + e.what());
  }
}

std::string mock_llm_response(const std::string& prompt, double temperature) {
  const std::uint64_t h = mix_seed(hash_string(prompt), static_cast<std::uint64_t>(temperature * 1000));
  if (prompt.ends_with("Score:")) return "Score: " + std::to_string(2 + h % 4);
  if (prompt.ends_with("Summary:")) {
    return "- Key findings point to the admitting problem.\n- Course and risks drive the stay.";
  }
  static constexpr std::string_view kSteps[] = {
      "Identify the main findings in the note.",
      "Relate them to the expected length of stay.",
      "Check for complications that prolong admission.",
  };
  std::string out;
  const std::size_t n_steps = 1 + h % 3;
  for (std::size_t i = 0; i < n_steps; ++i) {
    out += std::to_string(i + 1) + ". " + std::string(kSteps[i]) + "\n";
  }
  if (prompt.find("Key Clinical Findings:") != std::string::npos) {
    out += std::to_string(n_steps + 1) + ". Weigh the highlighted key findings first.\n";
  }
  return "  " + out;
}

struct MockChatServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<std::size_t> requests{0};
};

MockChatServer::MockChatServer(Responder responder) : impl_(std::make_unique<Impl>()) {
  impl_->server.Post(".*", [this, responder](const httplib::Request& req, httplib::Response& res) {
    ++impl_->requests;
    try {
      const auto j = json::parse(req.body);
      const auto& messages = j.at("messages");
      const auto prompt = messages.at(messages.size() - 1).at("content").get<std::string>();
      const double temperature = j.value("temperature", 0.0);
      const json reply = {
          {"object", "chat.completion"},
          {"model", j.value("model", std::string("mock"))},
          {"choices", json::array({{{"index", 0},
                                    {"message", {{"role", "assistant"},
                                                 {"content", responder(prompt, temperature)}}},
                                    {"finish_reason", "stop"}}})}};
      res.set_content(reply.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(e.what(), "text/plain");
    }
  });
  impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  if (impl_->port <= 0) throw IoError("mock LLM server: cannot bind a local port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockChatServer::~MockChatServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int MockChatServer::port() const { return impl_->port; }

std::string MockChatServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port) + "/v1/chat/completions";
}

std::size_t MockChatServer::requests() const { return impl_->requests.load(); }

// ---------------------------------------------------------------------------

std::string to_json_line(const ReasoningRun& run) {
  json j = {{"record", "run"},
            {"note_id", run.note_id},
            {"prompt_kind", to_string(run.prompt_kind)},
            {"run_index", run.run_index},
            {"response_text", run.response_text},
            {"timestamp", run.timestamp},
            {"failed", run.failed},
            {"retried", run.retried}};
  if (!run.error.empty()) j["error"] = run.error;
  return j.dump();
}

std::string to_json_line(const JudgeScore& score) {
  return json({{"record", "judge"},
               {"note_id", score.note_id},
               {"prompt_kind", to_string(score.prompt_kind)},
               {"run_index", score.run_index},
               {"score", score.score}})
      .dump();
}

RunLog::RunLog(const std::filesystem::path& path) : out_(path, std::ios::app), path_(path) {
  if (!out_) throw IoError("cannot open run log: " + path.string());
}

void RunLog::append(const ReasoningRun& run) { write_line(to_json_line(run)); }
void RunLog::append(const JudgeScore& score) { write_line(to_json_line(score)); }

void RunLog::write_line(const std::string& line) {
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw IoError("error while writing run log: " + path_.string());
}

namespace {

std::string complete_nonempty(const LlmClient& client, const std::string& prompt, double t) {
  std::string text(trim(client.complete(prompt, t)));
  if (text.empty()) throw BackendError("empty completion");
  return text;
}

}  // namespace

std::vector<ReasoningRun> run_repeats(const std::string& note_id, PromptKind kind,
                                      const std::string& prompt, const PromptConfig& config,
                                      const LlmClient& client, RunLog* log) {
  config.validate();
  std::vector<ReasoningRun> runs;
  for (std::size_t i = 0; i < config.repeats; ++i) {
    ReasoningRun run;
    run.note_id = note_id;
    run.prompt_kind = kind;
    run.run_index = i;
    try {
      run.response_text = complete_nonempty(client, prompt, config.temperature);
    } catch (const BackendError&) {
      run.retried = true;
      try {
        run.response_text = complete_nonempty(client, prompt, config.temperature);
      } catch (const EndpointUnreachable& e) {
        throw EndpointUnreachable(std::string(e.what()) + " (after retry)");
      } catch (const BackendError& e) {
        run.failed = true;
        run.error = e.what();
      }
    }
    run.timestamp = now_iso8601();
    if (log) log->append(run);
    runs.push_back(std::move(run));
  }
  return runs;
}

int parse_judge_score(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    if (j - i == 1 && text[i] >= '1' && text[i] <= '5') return text[i] - '0';
    i = j;
  }
  throw ValidationError("unparsable judge output: \"" + std::string(text.substr(0, 80)) + "\"");
}

JudgeScore judge_score(const ReasoningRun& run, const PromptConfig& config,
                       const LlmClient& client) {
  if (run.failed || run.response_text.empty()) {
    throw ValidationError("judge_score: run " + run.note_id + "/" +
                          std::to_string(run.run_index) + " has no explanation to score");
  }
  const auto prompt = build_judge_prompt(run.response_text);
  std::string reply;
  try {
    reply = client.complete(prompt, config.judge_temperature);
  } catch (const EndpointUnreachable&) {
    throw;
  } catch (const BackendError&) {
    reply = client.complete(prompt, config.judge_temperature);
  }
  return {run.note_id, run.prompt_kind, run.run_index, parse_judge_score(reply)};
}

std::size_t count_bullets(std::string_view text) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos));
    if (line.starts_with("-") || line.starts_with("*") || line.starts_with("\xE2\x80\xA2")) {
      ++n;
    } else {
      std::size_t d = 0;
      while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
      if (d > 0 && d < line.size() && (line[d] == '.' || line[d] == ')')) ++n;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return n;
}

std::string summarize_bullets(std::string_view keywords, std::string_view reasoning,
                              const PromptConfig& config, const LlmClient& client) {
  if (trim(reasoning).empty()) throw ValidationError("summarize_bullets: empty reasoning");
  const auto prompt = build_summary_prompt(keywords, reasoning, config.system_role);
  std::string first(trim(client.complete(prompt, config.temperature)));
  const auto n_first = count_bullets(first);
  if (n_first <= 3) return first;
  const std::string reprompt = prompt + "\n\nYour previous answer had " + std::to_string(n_first) +
                               " bullet points. Answer again with at most 3.\n\nSummary:";
  std::string second(trim(client.complete(reprompt, config.temperature)));
  if (count_bullets(second) <= 3) return second;
  throw ValidationError("summary still has more than 3 bullet points after one reprompt");
}

std::string format_2dp(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string ScoreSummary::formatted() const {
  return format_2dp(mean) + " \xC2\xB1 " + format_2dp(std);
}

std::vector<ScoreSummary> aggregate_scores(std::span<const JudgeScore> scores) {
  if (scores.empty()) throw ValidationError("aggregate_scores: no scores");
  std::map<PromptKind, std::vector<double>> groups;
  for (const auto& s : scores) {
    if (s.score < 1 || s.score > 5) throw ValidationError("aggregate_scores: score outside 1..5");
    groups[s.prompt_kind].push_back(s.score);
  }
  std::vector<ScoreSummary> out;
  for (const auto& [kind, values] : groups) {
    ScoreSummary summary;
    summary.prompt_kind = kind;
    summary.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    summary.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) {
      summary.single_sample = true;
    } else {
      double ss = 0.0;
      for (double v : values) ss += (v - summary.mean) * (v - summary.mean);
      summary.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    out.push_back(summary);
  }
  return out;
}

ReasoningResult run_reasoning(std::span<const ReasoningCase> cases, const PromptConfig& config,
                              const LlmClient& client, RunLog& log, std::size_t workers) {
  config.validate();
  if (cases.empty()) throw ValidationError("run_reasoning: no cases");
  std::vector<std::vector<ReasoningRun>> per_case(cases.size());
  parallel_for(cases.size(), workers, [&](std::size_t i) {
    const auto& c = cases[i];
    auto full = run_repeats(c.note_id, PromptKind::full_text,
                            build_full_text_prompt(c.note_text, config.system_role), config,
                            client, &log);
    per_case[i] = std::move(full);
    if (trim(c.keywords).empty()) return;
    auto hybrid = run_repeats(c.note_id, PromptKind::hybrid,
                              build_hybrid_prompt(c.keywords, c.note_text, config.system_role),
                              config, client, &log);
    per_case[i].insert(per_case[i].end(), std::make_move_iterator(hybrid.begin()),
                       std::make_move_iterator(hybrid.end()));
  });

  // Every completion is on disk before the first judge call.
  std::vector<std::vector<JudgeScore>> judged(cases.size());
  parallel_for(cases.size(), workers, [&](std::size_t i) {
    for (const auto& run : per_case[i]) {
      if (run.failed) continue;
      auto score = judge_score(run, config, client);
      log.append(score);
      judged[i].push_back(score);
    }
  });

  ReasoningResult result;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    result.runs.insert(result.runs.end(), per_case[i].begin(), per_case[i].end());
    result.scores.insert(result.scores.end(), judged[i].begin(), judged[i].end());
  }
  if (!result.scores.empty()) result.summaries = aggregate_scores(result.scores);
  return result;
}

void write_score_sheet(std::span<const ScoreSheetEntry> entries, std::uint64_t seed,
                       const std::filesystem::path& sheet_path,
                       const std::filesystem::path& key_path) {
  if (entries.empty()) throw ValidationError("score sheet: no entries");
  std::ofstream sheet(sheet_path, std::ios::binary);
  if (!sheet) throw IoError("cannot write: " + sheet_path.string());
  std::ofstream key(key_path, std::ios::binary);
  if (!key) throw IoError("cannot write: " + key_path.string());
  sheet << "case_id,method_label,bullets\n";
  key << "case_id,method_label,prompt_kind,note_id\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    char id[32];
    std::snprintf(id, sizeof id, "case_%02zu", i + 1);
    Rng rng(mix_seed(seed, hash_string(e.note_id)));
    const bool hybrid_first = rng.bernoulli(0.5);
    const std::string* a = hybrid_first ? &e.hybrid_bullets : &e.full_text_bullets;
    const std::string* b = hybrid_first ? &e.full_text_bullets : &e.hybrid_bullets;
    sheet << id << ",A," << csv_escape(*a) << '\n' << id << ",B," << csv_escape(*b) << '\n';
    key << id << ",A," << (hybrid_first ? "hybrid" : "full_text") << ',' << csv_escape(e.note_id)
        << '\n';
    key << id << ",B," << (hybrid_first ? "full_text" : "hybrid") << ',' << csv_escape(e.note_id)
        << '\n';
  }
  if (!sheet || !key) throw IoError("error while writing the score sheet");
}

}  // namespace ttxai
