#include "ttxai/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ttxai/error.hpp"
#include "ttxai/parallel.hpp"

namespace ttxai {

using json = nlohmann::json;

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::builtin:
      return "builtin";
    case ClassifierKind::subprocess:
      return "subprocess";
    case ClassifierKind::http:
      return "http";
  }
  return "builtin";
}

ClassifierHandle::ClassifierHandle(ClassifierKind kind, std::string endpoint,
                                   std::size_t max_tokens,
                                   std::shared_ptr<const Classifier> backend)
    : kind_(kind), endpoint_(std::move(endpoint)), max_tokens_(max_tokens),
      backend_(std::move(backend)) {
  if (max_tokens_ < 1) throw ValidationError("classifier handle: max_tokens must be >= 1");
  if (!backend_) throw ValidationError("classifier handle: missing backend");
}

ClassifierHandle ClassifierHandle::with_max_tokens(std::size_t max_tokens) const {
  return ClassifierHandle(kind_, endpoint_, max_tokens, backend_);
}

std::vector<ProbPair> ClassifierHandle::predict_proba(std::span<const std::string> texts) const {
  if (texts.empty()) throw ValidationError("empty batch");
  std::vector<std::string> inputs;
  inputs.reserve(texts.size());
  for (const auto& t : texts) inputs.push_back(truncate_tokens(t, max_tokens_));

  std::vector<ProbPair> out;
  try {
    out = backend_->predict(inputs);
  } catch (const BackendError&) {
    backend_->recover();
    out = backend_->predict(inputs);
  }
  if (out.size() != inputs.size()) {
    throw BackendError("malformed response: expected " + std::to_string(inputs.size()) +
                       " probability pairs, got " + std::to_string(out.size()));
  }
  for (const auto& p : out) {
    const bool in_range = p.p0 >= 0.0 && p.p0 <= 1.0 && p.p1 >= 0.0 && p.p1 <= 1.0;
    if (!in_range || std::abs(p.p0 + p.p1 - 1.0) > 1e-9) {
      throw BackendError("malformed response: probabilities must lie in [0,1] and sum to 1");
    }
  }
  return out;
}

double ClassifierHandle::positive_probability(const std::string& text) const {
  return predict_proba(std::span<const std::string>(&text, 1)).front().p1;
}

std::vector<ProbPair> FunctionClassifier::predict(std::span<const std::string> texts) const {
  std::vector<ProbPair> out(texts.size());
  parallel_for(texts.size(), workers_, [&](std::size_t i) {
    const double p1 = p1_(texts[i]);
    out[i] = {1.0 - p1, p1};
  });
  return out;
}

ClassifierHandle make_function_handle(FunctionClassifier::Fn p1, std::size_t max_tokens,
                                      std::size_t workers) {
  return ClassifierHandle(ClassifierKind::builtin, "function", max_tokens,
                          std::make_shared<FunctionClassifier>(std::move(p1), workers));
}

// ---------------------------------------------------------------------------

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(const SparseRow& row, std::span<const double> w) {
  double s = 0.0;
  for (const auto& [j, x] : row.entries) s += w[j] * x;
  return s;
}

}  // namespace

void BaselineModel::index_terms() {
  vocabulary.clear();
  for (std::uint32_t i = 0; i < terms.size(); ++i) vocabulary.emplace(terms[i], i);
}

SparseRow BaselineModel::featurize(std::string_view text) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& tok : tokenize_words(text)) {
    if (auto it = vocabulary.find(tok); it != vocabulary.end()) counts[it->second] += 1.0;
  }
  SparseRow row;
  double norm = 0.0;
  for (const auto& [j, tf] : counts) {
    const double v = tf * idf[j];
    row.entries.emplace_back(j, v);
    norm += v * v;
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& e : row.entries) e.second /= norm;
  }
  return row;
}

ProbPair BaselineModel::predict(std::string_view text) const {
  const double p1 = sigmoid(dot(featurize(text), weights) + bias);
  return {1.0 - p1, p1};
}

std::string BaselineModel::to_json() const {
  json j = {{"format", "ttxai-baseline-v1"},
            {"terms", terms},
            {"idf", idf},
            {"weights", weights},
            {"bias", bias},
            {"class_weights", {class_weights.first, class_weights.second}},
            {"seed", seed}};
  return j.dump();
}

BaselineModel BaselineModel::from_json(std::string_view json_text) {
  BaselineModel m;
  try {
    const auto j = json::parse(json_text);
    if (j.value("format", "") != "ttxai-baseline-v1") {
      throw ValidationError("not a ttxai baseline model");
    }
    m.terms = j.at("terms").get<std::vector<std::string>>();
    m.idf = j.at("idf").get<std::vector<double>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    const auto cw = j.at("class_weights").get<std::vector<double>>();
    if (cw.size() != 2) throw ValidationError("class_weights must have two entries");
    m.class_weights = {cw[0], cw[1]};
    m.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
  if (m.idf.size() != m.terms.size() || m.weights.size() != m.terms.size()) {
    throw ValidationError("malformed model file: vector sizes disagree");
  }
  m.index_terms();
  return m;
}

void BaselineModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model: " + path.string());
  out << to_json() << '\n';
}

BaselineModel BaselineModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::vector<ProbPair> BaselineClassifier::predict(std::span<const std::string> texts) const {
  std::vector<ProbPair> out(texts.size());
  parallel_for(texts.size(), workers_, [&](std::size_t i) { out[i] = model_->predict(texts[i]); });
  return out;
}

ClassifierHandle make_builtin_handle(std::shared_ptr<const BaselineModel> model,
                                     std::size_t max_tokens, std::size_t workers) {
  return ClassifierHandle(ClassifierKind::builtin, "builtin", max_tokens,
                          std::make_shared<BaselineClassifier>(std::move(model), workers));
}

std::pair<double, double> class_weights_for(std::span<const int> labels) {
  double counts[2] = {0.0, 0.0};
  for (int y : labels) {
    if (y != 0 && y != 1) throw ValidationError("labels must be 0 or 1");
    counts[y] += 1.0;
  }
  if (counts[0] == 0.0 || counts[1] == 0.0) {
    throw ValidationError("training set contains a single class");
  }
  const double n = counts[0] + counts[1];
  return {n / (2.0 * counts[0]), n / (2.0 * counts[1])};
}

WeightedLogisticLoss::WeightedLogisticLoss(std::vector<SparseRow> rows, std::vector<int> labels,
                                           std::size_t dim,
                                           std::pair<double, double> class_weights, double l2)
    : rows_(std::move(rows)), labels_(std::move(labels)), dim_(dim),
      class_weights_(class_weights), l2_(l2) {
  if (rows_.size() != labels_.size()) throw ValidationError("rows/labels size mismatch");
  if (rows_.empty()) throw ValidationError("empty training set");
}

double WeightedLogisticLoss::value(std::span<const double> params) const {
  const auto w = params.first(dim_);
  const double b = params[dim_];
  double loss = 0.0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const double z = dot(rows_[i], w) + b;
    const double cw = labels_[i] == 1 ? class_weights_.second : class_weights_.first;
    loss += cw * (softplus(z) - labels_[i] * z);
  }
  loss /= static_cast<double>(rows_.size());
  double reg = 0.0;
  for (double x : w) reg += x * x;
  return loss + 0.5 * l2_ * reg;
}

std::vector<double> WeightedLogisticLoss::gradient(std::span<const double> params) const {
  const auto w = params.first(dim_);
  const double b = params[dim_];
  std::vector<double> grad(dim_ + 1, 0.0);
  const double inv_n = 1.0 / static_cast<double>(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const double z = dot(rows_[i], w) + b;
    const double cw = labels_[i] == 1 ? class_weights_.second : class_weights_.first;
    const double r = cw * (sigmoid(z) - labels_[i]) * inv_n;
    for (const auto& [j, x] : rows_[i].entries) grad[j] += r * x;
    grad[dim_] += r;
  }
  for (std::size_t j = 0; j < dim_; ++j) grad[j] += l2_ * w[j];
  return grad;
}

BaselineModel train_baseline(std::span<const LabeledText> train, const TrainOptions& options) {
  std::vector<int> labels;
  labels.reserve(train.size());
  for (const auto& ex : train) labels.push_back(ex.label);
  BaselineModel model;
  model.class_weights = class_weights_for(labels);
  model.seed = options.seed;

  std::vector<std::vector<std::string>> docs;
  docs.reserve(train.size());
  std::map<std::string, std::size_t> df;
  for (const auto& ex : train) {
    docs.push_back(tokenize_words(ex.text));
    std::set<std::string> unique(docs.back().begin(), docs.back().end());
    for (const auto& t : unique) ++df[t];
  }
  const double n = static_cast<double>(train.size());
  for (const auto& [term, count] : df) {
    model.terms.push_back(term);
    model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  model.index_terms();

  std::vector<SparseRow> rows;
  rows.reserve(docs.size());
  for (const auto& ex : train) rows.push_back(model.featurize(ex.text));

  const std::size_t dim = model.terms.size();
  WeightedLogisticLoss loss(std::move(rows), labels, dim, model.class_weights, options.l2);
  std::vector<double> params(dim + 1, 0.0);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto g = loss.gradient(params);
    for (std::size_t j = 0; j < params.size(); ++j) params[j] -= options.lr * g[j];
  }
  model.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(dim));
  model.bias = params[dim];
  return model;
}

// ---------------------------------------------------------------------------

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw ValidationError("accuracy: length mismatch");
  if (y_true.empty()) throw ValidationError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i];
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

double macro_f1(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw ValidationError("macro_f1: length mismatch");
  if (y_true.empty()) throw ValidationError("macro_f1: empty input");
  double total = 0.0;
  for (int c = 0; c < 2; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const bool t = y_true[i] == c;
      const bool p = y_pred[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    const double denom = 2 * tp + fp + fn;
    total += denom > 0 ? 2 * tp / denom : 0.0;
  }
  return total / 2.0;
}

MeanStd mean_sample_std(std::span<const double> values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(out.n);
  if (out.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(out.n - 1));
  }
  return out;
}

std::string EvalReport::to_json() const {
  json j = {{"folds", accuracy.size()},
            {"accuracy", {{"per_fold", accuracy},
                          {"mean", accuracy_summary.mean},
                          {"std", accuracy_summary.std}}},
            {"macro_f1", {{"per_fold", macro_f1},
                          {"mean", macro_f1_summary.mean},
                          {"std", macro_f1_summary.std}}}};
  return j.dump(2);
}

EvalReport evaluate_cv(std::span<const LabeledText> data, const std::vector<Fold>& folds,
                       const ModelFactory& factory) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < data.size(); ++i) index.emplace(data[i].id, i);
  auto lookup = [&](const std::string& id) -> const LabeledText& {
    auto it = index.find(id);
    if (it == index.end()) throw ValidationError("fold references unknown id: " + id);
    return data[it->second];
  };
  EvalReport report;
  for (const auto& fold : folds) {
    std::vector<LabeledText> train;
    for (const auto& id : fold.train_ids) train.push_back(lookup(id));
    std::vector<std::string> texts;
    std::vector<int> truth;
    for (const auto& id : fold.test_ids) {
      texts.push_back(lookup(id).text);
      truth.push_back(lookup(id).label);
    }
    if (texts.empty()) throw ValidationError("fold with an empty test set");
    const auto handle = factory(train);
    const auto probs = handle.predict_proba(texts);
    std::vector<int> pred;
    for (const auto& p : probs) pred.push_back(p.p1 > 0.5 ? 1 : 0);
    report.accuracy.push_back(ttxai::accuracy(truth, pred));
    report.macro_f1.push_back(ttxai::macro_f1(truth, pred));
  }
  report.accuracy_summary = mean_sample_std(report.accuracy);
  report.macro_f1_summary = mean_sample_std(report.macro_f1);
  return report;
}

}  // namespace ttxai
