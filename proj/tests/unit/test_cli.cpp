#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ttxai/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "ttxai");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = ttxai::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("ttxai_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  return d;
}

const std::string kSample = std::string(TTXAI_FIXTURES_DIR) + "/configs/sample.toml";

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  const auto bad = run({"ingest", "--no-such-flag"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE((bad.out + bad.err).find("Usage"), std::string::npos) << bad.out << bad.err;
  EXPECT_EQ(run({"explain", "--method", "sideways"}).code, 1);
}

TEST(Cli, MissingInputIsIoError) {
  const auto out = fresh_dir("missing");
  const auto r = run({"ingest", "--corpus", "/nonexistent/notes.jsonl", "--out", out.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/nonexistent/notes.jsonl"), std::string::npos) << r.err;
  EXPECT_EQ(run({"--config", "/nonexistent/c.toml", "ingest"}).code, 2);
  fs::remove_all(out);
}

TEST(Cli, InvalidConfigValueIsValidationError) {
  const auto out = fresh_dir("invalid");
  const auto r = run({"ingest", "--config", kSample, "--folds", "0", "--out", out.string()});
  EXPECT_EQ(r.code, 1) << r.err;
  fs::remove_all(out);
}

TEST(Cli, BenchSpecWritesSummary) {
  const auto out = fresh_dir("bench");
  const auto r = run({"bench", "--spec", std::string(TTXAI_FIXTURES_DIR) + "/small.toml", "--out",
                      out.string(), "--workers", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out / "bench_summary.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_TRUE(j.contains("modality"));
  EXPECT_TRUE(j.contains("fidelity"));
  EXPECT_TRUE(j.contains("recovery"));
  EXPECT_TRUE(fs::exists(out / "resolved_config.toml"));
  EXPECT_TRUE(fs::exists(out / "ground_truth.jsonl"));
  fs::remove_all(out);
}

TEST(Cli, PipelineWritesSnapshotsEverywhere) {
  const auto root = fresh_dir("pipeline");
  const std::vector<std::vector<std::string>> steps{
      {"ingest"}, {"keywords"}, {"train"}, {"explain"}, {"fidelity"}, {"reason", "--mock-llm"}};
  const auto out = root / "run";
  for (const auto& step : steps) {
    std::vector<std::string> args{"--config", kSample, "--out", out.string()};
    args.insert(args.begin(), step.begin(), step.end());
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << step[0] << ": " << r.err;
  }
  for (const char* f : {"cohort.jsonl", "folds.json", "keywords.jsonl", "eval_report.json",
                        "model.json", "explanations.jsonl", "fidelity_curves.csv", "fidelity.svg",
                        "reasoning_runs.jsonl", "score_sheet.csv", "score_sheet_key.csv",
                        "reasoning_summary.json", "resolved_config.toml"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto merged = root / "merged";
  const auto rep = run({"report", "--from", out.string(), "--out", merged.string()});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_TRUE(fs::exists(merged / "report.json"));
  EXPECT_TRUE(fs::exists(merged / "resolved_config.toml"));
  fs::remove_all(root);
}
