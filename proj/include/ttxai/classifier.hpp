#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ttxai/corpus.hpp"

namespace ttxai {

struct ProbPair {
  double p0 = 0.5;
  double p1 = 0.5;
};

/// Black-box binary classifier. Implementations must be safe to call from
/// several threads at once.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::vector<ProbPair> predict(std::span<const std::string> texts) const = 0;
  /// Called after a failed predict() before the single retry.
  virtual void recover() const {}
};

enum class ClassifierKind { builtin, subprocess, http };

std::string_view to_string(ClassifierKind kind);

/// Uniform entry point to a classifier: truncation to `max_tokens`
/// whitespace-delimited tokens, response validation and one retry.
class ClassifierHandle {
 public:
  ClassifierHandle(ClassifierKind kind, std::string endpoint, std::size_t max_tokens,
                   std::shared_ptr<const Classifier> backend);

  ClassifierKind kind() const { return kind_; }
  const std::string& endpoint() const { return endpoint_; }
  std::size_t max_tokens() const { return max_tokens_; }

  /// Same backend with a different truncation length.
  ClassifierHandle with_max_tokens(std::size_t max_tokens) const;

  /// One (p0, p1) per text, in order. Throws ValidationError on an empty
  /// batch and BackendError when the backend fails twice or answers with a
  /// malformed response.
  std::vector<ProbPair> predict_proba(std::span<const std::string> texts) const;

  double positive_probability(const std::string& text) const;

 private:
  ClassifierKind kind_;
  std::string endpoint_;
  std::size_t max_tokens_;
  std::shared_ptr<const Classifier> backend_;
};

/// In-process classifier computing p1 from the text.
class FunctionClassifier : public Classifier {
 public:
  using Fn = std::function<double(const std::string&)>;
  explicit FunctionClassifier(Fn p1, std::size_t workers = 1)
      : p1_(std::move(p1)), workers_(workers) {}
  std::vector<ProbPair> predict(std::span<const std::string> texts) const override;

 private:
  Fn p1_;
  std::size_t workers_;
};

ClassifierHandle make_function_handle(FunctionClassifier::Fn p1, std::size_t max_tokens,
                                      std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Built-in TF-IDF + class-weighted logistic regression baseline

struct SparseRow {
  std::vector<std::pair<std::uint32_t, double>> entries;  // sorted by index
};

struct LabeledText {
  std::string id;
  std::string text;
  int label = 0;
};

struct BaselineModel {
  std::vector<std::string> terms;  // index -> term, sorted
  std::unordered_map<std::string, std::uint32_t> vocabulary;
  std::vector<double> idf;
  std::vector<double> weights;
  double bias = 0.0;
  std::pair<double, double> class_weights{1.0, 1.0};
  std::uint64_t seed = 0;

  /// Builds `vocabulary` from `terms`.
  void index_terms();
  /// L2-normalized TF-IDF row; out-of-vocabulary tokens are ignored.
  SparseRow featurize(std::string_view text) const;
  ProbPair predict(std::string_view text) const;

  std::string to_json() const;
  static BaselineModel from_json(std::string_view json_text);
  void save(const std::filesystem::path& path) const;
  static BaselineModel load(const std::filesystem::path& path);
};

class BaselineClassifier : public Classifier {
 public:
  BaselineClassifier(std::shared_ptr<const BaselineModel> model, std::size_t workers = 1)
      : model_(std::move(model)), workers_(workers) {}
  std::vector<ProbPair> predict(std::span<const std::string> texts) const override;

 private:
  std::shared_ptr<const BaselineModel> model_;
  std::size_t workers_;
};

ClassifierHandle make_builtin_handle(std::shared_ptr<const BaselineModel> model,
                                     std::size_t max_tokens, std::size_t workers = 1);

/// w_c = N / (2 N_c). Throws ValidationError unless both classes occur.
std::pair<double, double> class_weights_for(std::span<const int> labels);

/// Mean class-weighted binary cross-entropy plus (l2/2)||w||^2 (bias not
/// penalized). Parameters are laid out as [w_0 .. w_{d-1}, bias].
class WeightedLogisticLoss {
 public:
  WeightedLogisticLoss(std::vector<SparseRow> rows, std::vector<int> labels, std::size_t dim,
                       std::pair<double, double> class_weights, double l2);

  std::size_t num_params() const { return dim_ + 1; }
  double value(std::span<const double> params) const;
  std::vector<double> gradient(std::span<const double> params) const;

 private:
  std::vector<SparseRow> rows_;
  std::vector<int> labels_;
  std::size_t dim_;
  std::pair<double, double> class_weights_;
  double l2_;
};

struct TrainOptions {
  double l2 = 1e-4;
  std::size_t epochs = 300;
  double lr = 4.0;
  std::uint64_t seed = 0;
};

/// Full-batch gradient descent from zero weights. Deterministic.
BaselineModel train_baseline(std::span<const LabeledText> train, const TrainOptions& options);

// ---------------------------------------------------------------------------
// Metrics and cross-validation

double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// Unweighted mean of the two per-class F1 scores; a class with no true and
/// no predicted members scores 0.
double macro_f1(std::span<const int> y_true, std::span<const int> y_pred);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) standard deviation; 0 when n < 2
  std::size_t n = 0;
};

MeanStd mean_sample_std(std::span<const double> values);

struct EvalReport {
  std::vector<double> accuracy;
  std::vector<double> macro_f1;
  MeanStd accuracy_summary;
  MeanStd macro_f1_summary;

  std::string to_json() const;
};

/// Trains (or wraps) a model for one fold's training portion.
using ModelFactory = std::function<ClassifierHandle(std::span<const LabeledText> train)>;

/// Per fold: build a model on the training ids, predict the test ids
/// (class 1 iff p1 > 0.5) and score them.
EvalReport evaluate_cv(std::span<const LabeledText> data, const std::vector<Fold>& folds,
                       const ModelFactory& factory);

// ---------------------------------------------------------------------------
// External adapters (line-delimited JSON over a child's stdin/stdout, or
// HTTP POST /predict). Request {"id": u64, "texts": [str]}, response
// {"id": u64, "probs": [[p0, p1], ...]}.

struct AdapterOptions {
  std::chrono::milliseconds timeout{120000};
};

ClassifierHandle make_subprocess_handle(const std::string& command, std::size_t max_tokens,
                                        AdapterOptions options = {});
ClassifierHandle make_http_handle(const std::string& url, std::size_t max_tokens,
                                  AdapterOptions options = {});

/// Builds the protocol request line (no trailing newline).
std::string encode_predict_request(std::uint64_t id, std::span<const std::string> texts);

/// Parses a response and checks the id echo and batch size. Throws
/// BackendError on any mismatch.
std::vector<ProbPair> decode_predict_response(std::string_view body, std::uint64_t expected_id,
                                              std::size_t expected_count);

}  // namespace ttxai
