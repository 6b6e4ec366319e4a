#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <mutex>

#include <httplib.h>
#include <json.hpp>

#include "ttxai/classifier.hpp"
#include "ttxai/error.hpp"

namespace ttxai {

using json = nlohmann::json;

std::string encode_predict_request(std::uint64_t id, std::span<const std::string> texts) {
  json j = {{"id", id}, {"texts", json::array()}};
  for (const auto& t : texts) j["texts"].push_back(t);
  return j.dump();
}

std::vector<ProbPair> decode_predict_response(std::string_view body, std::uint64_t expected_id,
                                              std::size_t expected_count) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("malformed response: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j.contains("probs") || !j["probs"].is_array()) {
    throw BackendError("malformed response: expected {\"id\", \"probs\"}");
  }
  if (!j["id"].is_number_unsigned() && !j["id"].is_number_integer()) {
    throw BackendError("malformed response: id is not an integer");
  }
  if (j["id"].get<std::uint64_t>() != expected_id) {
    throw BackendError("malformed response: id echo mismatch");
  }
  const auto& probs = j["probs"];
  if (probs.size() != expected_count) {
    throw BackendError("malformed response: expected " + std::to_string(expected_count) +
                       " probability pairs, got " + std::to_string(probs.size()));
  }
  std::vector<ProbPair> out;
  out.reserve(probs.size());
  for (const auto& p : probs) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw BackendError("malformed response: each entry must be [p0, p1]");
    }
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

namespace {

std::atomic<std::uint64_t> g_request_id{1};

// Child process speaking the line protocol on its stdin/stdout.
class SubprocessClassifier : public Classifier {
 public:
  SubprocessClassifier(std::string command, AdapterOptions options)
      : command_(std::move(command)), options_(options) {
    std::lock_guard lock(mutex_);
    start();
  }
  ~SubprocessClassifier() override {
    std::lock_guard lock(mutex_);
    stop();
  }

  std::vector<ProbPair> predict(std::span<const std::string> texts) const override {
    std::lock_guard lock(mutex_);
    if (pid_ <= 0) start();
    const std::uint64_t id = g_request_id.fetch_add(1);
    const std::string line = encode_predict_request(id, texts) + "\n";
    write_all(line);
    return decode_predict_response(read_line(), id, texts.size());
  }

  void recover() const override {
    std::lock_guard lock(mutex_);
    stop();
    start();
  }

 private:
  void start() const {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      throw BackendError(std::string("pipe: ") + std::strerror(errno));
    }
    const pid_t pid = fork();
    if (pid < 0) throw BackendError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    pid_ = pid;
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    buffer_.clear();
  }

  void stop() const {
    if (in_fd_ >= 0) close(in_fd_);
    if (out_fd_ >= 0) close(out_fd_);
    in_fd_ = out_fd_ = -1;
    if (pid_ > 0) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == 0) {
        kill(pid_, SIGTERM);
        waitpid(pid_, &status, 0);
      }
    }
    pid_ = -1;
  }

  void write_all(const std::string& data) const {
    // A dead child must surface as an error, not SIGPIPE.
    struct sigaction ignore {};
    struct sigaction previous {};
    ignore.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ignore, &previous);
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(in_fd_, data.data() + off, data.size() - off);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        sigaction(SIGPIPE, &previous, nullptr);
        throw BackendError("classifier subprocess closed its input (" + command_ + ")");
      }
      off += static_cast<std::size_t>(n);
    }
    sigaction(SIGPIPE, &previous, nullptr);
  }

  std::string read_line() const {
    for (;;) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      pollfd pfd{out_fd_, POLLIN, 0};
      const int ready = poll(&pfd, 1, static_cast<int>(options_.timeout.count()));
      if (ready < 0 && errno == EINTR) continue;
      if (ready == 0) throw BackendError("classifier subprocess timed out (" + command_ + ")");
      char chunk[65536];
      const ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw BackendError("classifier subprocess exited (" + command_ + ")");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::string command_;
  AdapterOptions options_;
  mutable std::mutex mutex_;
  mutable pid_t pid_ = -1;
  mutable int in_fd_ = -1;
  mutable int out_fd_ = -1;
  mutable std::string buffer_;
};

struct ParsedUrl {
  std::string base;  // scheme://host:port
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ValidationError("URL lacks a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  return {url.substr(0, slash), url.substr(slash)};
}

class HttpClassifier : public Classifier {
 public:
  HttpClassifier(const std::string& url, AdapterOptions options) : options_(options) {
    auto parsed = parse_url(url);
    base_ = parsed.base;
    path_ = parsed.path.empty() || parsed.path == "/" ? "/predict" : parsed.path;
  }

  std::vector<ProbPair> predict(std::span<const std::string> texts) const override {
    const std::uint64_t id = g_request_id.fetch_add(1);
    httplib::Client client(base_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout).count();
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    auto res = client.Post(path_, encode_predict_request(id, texts), "application/json");
    if (!res) {
      throw BackendError("classifier endpoint unreachable: " + base_ + path_ + " (" +
                         httplib::to_string(res.error()) + ")");
    }
    if (res->status != 200) {
      throw BackendError("classifier endpoint returned HTTP " + std::to_string(res->status));
    }
    return decode_predict_response(res->body, id, texts.size());
  }

 private:
  AdapterOptions options_;
  std::string base_;
  std::string path_;
};

}  // namespace

ClassifierHandle make_subprocess_handle(const std::string& command, std::size_t max_tokens,
                                        AdapterOptions options) {
  return ClassifierHandle(ClassifierKind::subprocess, command, max_tokens,
                          std::make_shared<SubprocessClassifier>(command, options));
}

ClassifierHandle make_http_handle(const std::string& url, std::size_t max_tokens,
                                  AdapterOptions options) {
  return ClassifierHandle(ClassifierKind::http, url, max_tokens,
                          std::make_shared<HttpClassifier>(url, options));
}

}  // namespace ttxai
