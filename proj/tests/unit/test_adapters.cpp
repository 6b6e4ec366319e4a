#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ttxai/classifier.hpp"
#include "ttxai/error.hpp"

using namespace ttxai;
namespace fs = std::filesystem;

namespace {

std::string sidecar(const std::string& args) { return std::string(TTXAI_FAKE_SIDECAR) + " " + args; }

class PredictServer {
 public:
  explicit PredictServer(int status = 200) {
    server_.Post("/predict", [status](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json probs = nlohmann::json::array();
      for (const auto& t : body["texts"]) {
        const double p1 = t.get<std::string>().size() > 5 ? 0.8 : 0.1;
        probs.push_back({1.0 - p1, p1});
      }
      res.status = status;
      res.set_content(nlohmann::json({{"id", body["id"]}, {"probs", probs}}).dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~PredictServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/predict"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(Protocol, RequestAndResponseShapes) {
  const std::vector<std::string> texts{"a", "b"};
  const auto req = nlohmann::json::parse(encode_predict_request(7, texts));
  EXPECT_EQ(req["id"], 7);
  EXPECT_EQ(req["texts"], nlohmann::json(texts));
  const auto probs = decode_predict_response(R"({"id":7,"probs":[[0.25,0.75],[1,0]]})", 7, 2);
  EXPECT_DOUBLE_EQ(probs[0].p1, 0.75);
  EXPECT_THROW(decode_predict_response(R"({"id":8,"probs":[[0.5,0.5]]})", 7, 1), BackendError);
  EXPECT_THROW(decode_predict_response(R"({"id":7,"probs":[[0.5,0.5]]})", 7, 2), BackendError);
  EXPECT_THROW(decode_predict_response("not json", 7, 1), BackendError);
}

TEST(Subprocess, AnswersBatches) {
  const auto h = make_subprocess_handle(sidecar("ok"), 512);
  const std::vector<std::string> texts{"kidney stone", "fever", "stone"};
  const auto p = h.predict_proba(texts);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_DOUBLE_EQ(p[0].p1, 0.9);
  EXPECT_DOUBLE_EQ(p[1].p1, 0.2);
  EXPECT_DOUBLE_EQ(h.positive_probability("no match"), 0.2);
}

TEST(Subprocess, TruncatesBeforeSending) {
  const auto h = make_subprocess_handle(sidecar("ok"), 2);
  EXPECT_DOUBLE_EQ(h.positive_probability("renal colic stone"), 0.2);
}

TEST(Subprocess, WrongIdIsBackendError) {
  const auto h = make_subprocess_handle(sidecar("wrong-id"), 512);
  EXPECT_THROW(h.positive_probability("stone"), BackendError);
}

TEST(Subprocess, RestartsAfterCrash) {
  const auto marker = fs::temp_directory_path() / ("ttxai_sidecar_marker_" + std::to_string(::getpid()));
  fs::remove(marker);
  const auto h = make_subprocess_handle(sidecar("die-once " + marker.string()), 512);
  EXPECT_DOUBLE_EQ(h.positive_probability("stone"), 0.9);
  fs::remove(marker);
}

TEST(Http, PostsToPredictRoute) {
  PredictServer server;
  const auto h = make_http_handle(server.url(), 512);
  const std::vector<std::string> texts{"short", "a longer text"};
  const auto p = h.predict_proba(texts);
  EXPECT_DOUBLE_EQ(p[0].p1, 0.1);
  EXPECT_DOUBLE_EQ(p[1].p1, 0.8);
}

TEST(Http, ServerErrorAndUnreachable) {
  {
    PredictServer server(500);
    EXPECT_THROW(make_http_handle(server.url(), 512).positive_probability("x"), BackendError);
  }
  AdapterOptions fast{std::chrono::milliseconds(1000)};
  EXPECT_THROW(make_http_handle("http://127.0.0.1:1/predict", 512, fast).positive_probability("x"),
               BackendError);
}
