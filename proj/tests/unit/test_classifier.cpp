#include <gtest/gtest.h>

#include <cmath>

#include "ttxai/classifier.hpp"
#include "ttxai/error.hpp"
#include "ttxai/rng.hpp"
#include "ttxai/text.hpp"

using namespace ttxai;

namespace {

std::vector<LabeledText> toy_set() {
  std::vector<LabeledText> d;
  for (int i = 0; i < 5; ++i) d.push_back({"p" + std::to_string(i), "aaa bbb", 1});
  for (int i = 0; i < 5; ++i) d.push_back({"n" + std::to_string(i), "ccc ddd", 0});
  return d;
}

}  // namespace

TEST(Metrics, MacroF1HandComputed) {
  const std::vector<int> t{1, 1, 0, 0};
  const std::vector<int> p{1, 0, 0, 0};
  EXPECT_NEAR(macro_f1(t, p), 11.0 / 15.0, 1e-12);
  const std::vector<int> t2{1, 0};
  const std::vector<int> p2{0, 0};
  EXPECT_NEAR(macro_f1(t2, p2), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(accuracy(t, p), 0.75);
}

TEST(Metrics, SampleStd) {
  const std::vector<double> v{0.6, 0.8};
  const auto s = mean_sample_std(v);
  EXPECT_NEAR(s.mean, 0.7, 1e-12);
  EXPECT_NEAR(s.std, std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(s.std, 0.1414, 1e-4);
  const std::vector<double> one{0.5};
  EXPECT_EQ(mean_sample_std(one).std, 0.0);
}

TEST(Baseline, ClassWeights) {
  std::vector<int> labels(100, 0);
  std::fill(labels.begin(), labels.begin() + 75, 1);
  // 75 positives and 25 negatives.
  const auto [w0, w1] = class_weights_for(labels);
  EXPECT_NEAR(w1, 100.0 / 150.0, 1e-12);
  EXPECT_NEAR(w0, 100.0 / 50.0, 1e-12);
  const std::vector<int> single(4, 1);
  EXPECT_THROW(class_weights_for(single), ValidationError);
}

TEST(Baseline, SeparableToySetFitsPerfectly) {
  const auto data = toy_set();
  const auto model = train_baseline(data, TrainOptions{});
  for (const auto& ex : data) {
    EXPECT_EQ(model.predict(ex.text).p1 > 0.5 ? 1 : 0, ex.label) << ex.text;
  }
}

TEST(Baseline, SerializationRoundTrip) {
  const auto model = train_baseline(toy_set(), TrainOptions{});
  const auto back = BaselineModel::from_json(model.to_json());
  for (const std::string t : {"aaa", "ccc ddd", "zzz", "aaa ddd aaa"}) {
    EXPECT_DOUBLE_EQ(model.predict(t).p1, back.predict(t).p1);
  }
  EXPECT_THROW(BaselineModel::from_json("{}"), ValidationError);
}

TEST(BaselineProperty, ProbabilitiesSumToOne) {
  const auto model = std::make_shared<BaselineModel>(train_baseline(toy_set(), TrainOptions{}));
  const auto handle = make_builtin_handle(model, 512);
  Rng rng(3);
  const std::vector<std::string> words{"aaa", "bbb", "ccc", "ddd", "eee"};
  std::vector<std::string> texts;
  for (int i = 0; i < 50; ++i) {
    std::string t;
    for (std::size_t j = 0; j < rng.below(8); ++j) t += words[rng.below(words.size())] + " ";
    texts.push_back(t);
  }
  for (const auto& p : handle.predict_proba(texts)) EXPECT_NEAR(p.p0 + p.p1, 1.0, 1e-9);
}

TEST(HandleProperty, TruncationEqualsPrefix) {
  const auto model = std::make_shared<BaselineModel>(train_baseline(toy_set(), TrainOptions{}));
  const auto handle = make_builtin_handle(model, 3);
  const auto full = make_builtin_handle(model, 1000);
  Rng rng(8);
  const std::vector<std::string> words{"aaa", "bbb", "ccc", "ddd"};
  for (int i = 0; i < 30; ++i) {
    std::vector<std::string> toks;
    for (std::size_t j = 0; j < 1 + rng.below(10); ++j) toks.push_back(words[rng.below(4)]);
    const auto text = join(toks);
    EXPECT_DOUBLE_EQ(handle.positive_probability(text),
                     full.positive_probability(truncate_tokens(text, 3)));
  }
}

TEST(Handle, EmptyBatchAndBadBackend) {
  const auto bad = make_function_handle([](const std::string&) { return 1.5; }, 10);
  EXPECT_THROW(bad.predict_proba(std::vector<std::string>{}), ValidationError);
  EXPECT_THROW(bad.positive_probability("x"), BackendError);
}

TEST(Handle, RetriesOnceThenFails) {
  auto calls = std::make_shared<int>(0);
  const auto flaky = make_function_handle(
      [calls](const std::string&) {
        if ((*calls)++ == 0) throw BackendError("transient");
        return 0.3;
      },
      10);
  EXPECT_DOUBLE_EQ(flaky.positive_probability("x"), 0.3);
  const auto dead = make_function_handle([](const std::string&) -> double { throw BackendError("down"); }, 10);
  EXPECT_THROW(dead.positive_probability("x"), BackendError);
}

TEST(GradientCheck, MatchesCentralDifferences) {
  Rng rng(77);
  for (int inst = 0; inst < 5; ++inst) {
    const std::size_t dim = 3 + rng.below(5);
    const std::size_t n = 4 + rng.below(6);
    std::vector<SparseRow> rows(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::uint32_t j = 0; j < dim; ++j) {
        if (rng.bernoulli(0.6)) rows[i].entries.emplace_back(j, rng.uniform() * 2 - 1);
      }
      labels[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2));
    }
    const WeightedLogisticLoss loss(rows, labels, dim, class_weights_for(labels), 0.1);
    std::vector<double> params(loss.num_params());
    for (auto& p : params) p = rng.uniform() * 2 - 1;
    const auto g = loss.gradient(params);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto plus = params;
      auto minus = params;
      const double h = 1e-6;
      plus[k] += h;
      minus[k] -= h;
      const double fd = (loss.value(plus) - loss.value(minus)) / (2 * h);
      EXPECT_LE(std::abs(fd - g[k]) / std::max(1e-8, std::max(std::abs(fd), std::abs(g[k]))), 1e-5);
    }
  }
}

TEST(CrossValidation, FoldReportsUseHeldOutPredictions) {
  std::vector<LabeledText> data;
  std::vector<NoteRecord> records;
  for (int i = 0; i < 10; ++i) {
    const int label = i % 2;
    data.push_back({"n" + std::to_string(i), label ? "aaa bbb" : "ccc ddd", label});
    NoteRecord r;
    r.note_id = data.back().id;
    r.label = label;
    records.push_back(r);
  }
  const auto folds = stratified_folds(records, 2, 1);
  std::size_t train_sizes = 0;
  const auto report = evaluate_cv(data, folds, [&](std::span<const LabeledText> train) {
    train_sizes += train.size();
    return make_builtin_handle(std::make_shared<BaselineModel>(train_baseline(train, {})), 512);
  });
  EXPECT_EQ(train_sizes, 10u);
  ASSERT_EQ(report.macro_f1.size(), 2u);
  EXPECT_DOUBLE_EQ(report.macro_f1_summary.mean, 1.0);
  EXPECT_NE(report.to_json().find("\"macro_f1\""), std::string::npos);
}
