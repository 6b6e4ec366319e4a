#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "ttxai/config.hpp"
#include "ttxai/error.hpp"

using namespace ttxai;

TEST(Toml, ScalarsArraysAndComments) {
  const auto doc = parse_toml(R"(top = 1
# comment
[a]
s = "x\ty" # trailing
lit = 'c:\path'
f = 2.5
b = true
arr = ["p", "q"]
w = inf
)");
  EXPECT_EQ(std::get<std::int64_t>(doc.tables.at("").at("top").v), 1);
  EXPECT_EQ(std::get<std::string>(doc.tables.at("a").at("s").v), "x\ty");
  EXPECT_EQ(std::get<std::string>(doc.tables.at("a").at("lit").v), "c:\\path");
  EXPECT_DOUBLE_EQ(std::get<double>(doc.tables.at("a").at("f").v), 2.5);
  EXPECT_TRUE(std::get<bool>(doc.tables.at("a").at("b").v));
  EXPECT_EQ(std::get<TomlArray>(doc.tables.at("a").at("arr").v).size(), 2u);
  EXPECT_TRUE(std::isinf(std::get<double>(doc.tables.at("a").at("w").v)));
}

TEST(Toml, SyntaxErrorsCarryLineNumbers) {
  try {
    parse_toml("a = 1\nb = \n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_toml("a = 1\na = 2\n"), ValidationError);
  EXPECT_THROW(parse_toml("[x\n"), ValidationError);
}

TEST(RunConfig, UnknownKeysAndSectionsRejected) {
  EXPECT_THROW(parse_run_config("[nope]\nx = 1\n"), ValidationError);
  EXPECT_THROW(parse_run_config("[surrogate]\nsamples = 3\n"), ValidationError);
  EXPECT_THROW(parse_run_config("[surrogate]\nn_samples = \"many\"\n"), ValidationError);
  EXPECT_THROW(parse_run_config("[cohort]\nthreshold_mode = \"mean\"\n"), ValidationError);
  EXPECT_THROW(parse_run_config("[surrogate]\nn_samples = 0\n"), ValidationError);
}

TEST(RunConfig, SeedPropagates) {
  const auto c = parse_run_config("seed = 17\n");
  EXPECT_EQ(c.seed, 17u);
  EXPECT_EQ(c.surrogate.seed, 17u);
  EXPECT_EQ(c.synthetic.seed, 17u);
}

TEST(RunConfigProperty, TomlRoundTrip) {
  const auto c = parse_run_config(R"(seed = 5
workers = 3
[cohort]
threshold_mode = "fixed"
fixed_threshold_days = 4.5
folds = 3
[surrogate]
n_samples = 77
kernel_width = inf
[explain]
rank_by = "absolute"
[io]
boilerplate_patterns = ["^A", "b\"c"]
[synthetic]
signal_tokens = ["x1", "y2"]
)");
  const auto text = to_toml(c);
  const auto back = parse_run_config(text);
  EXPECT_EQ(to_toml(back), text);
  EXPECT_EQ(back.folds, 3u);
  EXPECT_EQ(back.surrogate.n_samples, 77u);
  EXPECT_TRUE(std::isinf(back.surrogate.kernel_width));
  EXPECT_EQ(back.io.boilerplate_patterns[1], "b\"c");
  EXPECT_EQ(back.explain.rank_by, RankBy::absolute);
  EXPECT_EQ(text.find("workers"), std::string::npos);
  EXPECT_EQ(to_toml(parse_run_config("")), to_toml(RunConfig{}));
}

TEST(RunConfig, MissingFileIsIoError) {
  EXPECT_THROW(load_run_config("/nonexistent/cfg.toml"), IoError);
  EXPECT_NO_THROW(load_run_config(std::filesystem::path(TTXAI_FIXTURES_DIR) / "configs" / "small.toml"));
}
