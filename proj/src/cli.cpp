#include "ttxai/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ttxai/bench.hpp"
#include "ttxai/classifier.hpp"
#include "ttxai/config.hpp"
#include "ttxai/corpus.hpp"
#include "ttxai/entities.hpp"
#include "ttxai/error.hpp"
#include "ttxai/explain.hpp"
#include "ttxai/fidelity.hpp"
#include "ttxai/keywords.hpp"
#include "ttxai/parallel.hpp"
#include "ttxai/reasoning.hpp"
#include "ttxai/text.hpp"

namespace ttxai {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;

  std::string corpus;
  std::string format;
  std::string threshold_mode;
  std::optional<double> threshold_days;
  std::optional<std::size_t> folds;
  std::string gazetteer;
  std::string input_mode = "raw";
  std::optional<std::size_t> max_tokens;
  std::string classifier_kind;
  std::string classifier_endpoint;
  std::string model;
  std::string method = "both";
  std::optional<std::size_t> max_notes;
  std::string explanations;
  std::string llm_endpoint;
  std::string llm_model;
  bool mock_llm = false;
  std::vector<std::string> from_dirs;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path.string());
  out << content;
  if (!out) throw IoError("error while writing: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ClassifierKind classifier_kind_from(const std::string& s) {
  if (s == "builtin") return ClassifierKind::builtin;
  if (s == "subprocess") return ClassifierKind::subprocess;
  if (s == "http") return ClassifierKind::http;
  throw ValidationError("unknown classifier kind: " + s);
}

RunConfig resolve_config(const Options& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (!o.out.empty()) c.io.out_dir = o.out;
  if (!o.corpus.empty()) c.io.corpus = o.corpus;
  if (!o.format.empty()) c.io.format = o.format;
  if (o.threshold_mode == "median") c.cohort.threshold_mode = ThresholdMode::median;
  if (o.threshold_mode == "fixed") c.cohort.threshold_mode = ThresholdMode::fixed;
  if (o.threshold_days) c.cohort.fixed_threshold_days = *o.threshold_days;
  if (o.folds) c.folds = *o.folds;
  if (!o.gazetteer.empty()) c.entities.gazetteer = o.gazetteer;
  if (o.max_tokens) c.classifier.max_tokens = *o.max_tokens;
  if (!o.classifier_kind.empty()) c.classifier.kind = classifier_kind_from(o.classifier_kind);
  if (!o.classifier_endpoint.empty()) c.classifier.endpoint = o.classifier_endpoint;
  if (!o.model.empty()) c.classifier.model_path = o.model;
  if (!o.llm_endpoint.empty()) c.prompt.endpoint = o.llm_endpoint;
  if (!o.llm_model.empty()) c.prompt.model_name = o.llm_model;
  c.propagate_seed();
  c.validate();
  return c;
}

fs::path prepare_out_dir(const RunConfig& c) {
  const fs::path dir = c.io.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_config_snapshot(dir, c);
  return dir;
}

std::vector<NoteRecord> load_labeled(const RunConfig& c, std::ostream& err,
                                     std::vector<Rejection>* rejections = nullptr) {
  if (c.io.corpus.empty()) throw ValidationError("no corpus given (--corpus or [io].corpus)");
  const fs::path path = c.io.corpus;
  const auto format = c.io.format.empty() ? corpus_format_for(path) : parse_corpus_format(c.io.format);
  auto loaded = load_corpus(path, format);
  if (!loaded.rejections.empty()) {
    err << "warning: " << loaded.rejections.size() << " record(s) rejected from " << path.string()
        << "\n";
  }
  if (rejections) *rejections = loaded.rejections;
  if (loaded.records.empty()) throw ValidationError("corpus has no valid records: " + path.string());
  // Labels present in the file win; otherwise derive them from LOS.
  const bool all_labeled = std::all_of(loaded.records.begin(), loaded.records.end(),
                                       [](const NoteRecord& r) { return r.label.has_value(); });
  if (all_labeled) return std::move(loaded.records);
  return binarize_los(std::move(loaded.records), c.cohort);
}

struct Prepared {
  NoteRecord record;
  TokenizedNote note;        // what the classifier and explainers see
  TokenizedNote raw;         // preprocessed raw note
  std::vector<Keyphrase> keyphrases;
  std::vector<EntityMatch> entities;
  std::string model_text;
};

bool distilled_mode(const std::string& mode) {
  if (mode == "raw") return false;
  if (mode == "distilled") return true;
  throw ValidationError("--input must be \"raw\" or \"distilled\"");
}

std::vector<Prepared> prepare(const std::vector<NoteRecord>& records, const RunConfig& c,
                              bool distilled, std::size_t workers) {
  std::optional<Gazetteer> gazetteer;
  if (!c.entities.gazetteer.empty()) gazetteer = load_gazetteer(c.entities.gazetteer);
  std::set<EntityCategory> excluded;
  for (const auto& name : c.entities.excluded_categories) excluded.insert(parse_entity_category(name));
  PreprocessOptions pp{c.io.boilerplate_patterns};

  std::vector<Prepared> out(records.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    auto& p = out[i];
    p.record = records[i];
    p.raw = preprocess(records[i], pp);
    p.keyphrases = extract_keywords(p.raw, c.rakun);
    if (gazetteer) p.entities = filter_categories(match_entities(p.raw, *gazetteer), excluded);
    if (distilled) {
      p.model_text = distill_note(p.keyphrases);
      p.note = tokenize_note(p.record.note_id, p.model_text);
    } else {
      p.model_text = join(p.raw.tokens);
      p.note = p.raw;
    }
  });
  return out;
}

std::vector<LabeledText> labeled_texts(const std::vector<Prepared>& data) {
  std::vector<LabeledText> out;
  out.reserve(data.size());
  for (const auto& p : data) out.push_back({p.record.note_id, p.model_text, *p.record.label});
  return out;
}

std::shared_ptr<const BaselineModel> train_truncated(std::span<const LabeledText> data,
                                                     const RunConfig& c) {
  std::vector<LabeledText> truncated(data.begin(), data.end());
  for (auto& ex : truncated) ex.text = truncate_tokens(ex.text, c.classifier.max_tokens);
  return std::make_shared<BaselineModel>(train_baseline(truncated, c.classifier.train));
}

ClassifierHandle make_handle(const RunConfig& c, const std::vector<Prepared>& data,
                             std::size_t workers) {
  const AdapterOptions adapter{std::chrono::milliseconds(
      static_cast<std::int64_t>(c.classifier.timeout_s * 1000.0))};
  switch (c.classifier.kind) {
    case ClassifierKind::subprocess:
      if (c.classifier.endpoint.empty()) throw ValidationError("subprocess classifier needs an endpoint command");
      return make_subprocess_handle(c.classifier.endpoint, c.classifier.max_tokens, adapter);
    case ClassifierKind::http:
      if (c.classifier.endpoint.empty()) throw ValidationError("http classifier needs an endpoint URL");
      return make_http_handle(c.classifier.endpoint, c.classifier.max_tokens, adapter);
    case ClassifierKind::builtin:
      break;
  }
  std::shared_ptr<const BaselineModel> model;
  if (!c.classifier.model_path.empty()) {
    model = std::make_shared<BaselineModel>(BaselineModel::load(c.classifier.model_path));
  } else {
    model = train_truncated(labeled_texts(data), c);
  }
  return make_builtin_handle(std::move(model), c.classifier.max_tokens, workers);
}

std::vector<Prepared> first_n(std::vector<Prepared> data, std::size_t n) {
  if (data.size() > n) data.resize(n);
  return data;
}

json eval_json(const EvalReport& r) { return json::parse(r.to_json()); }

// ---------------------------------------------------------------------------

int cmd_ingest(const Options& o, std::ostream& out, std::ostream& err) {
  const auto c = resolve_config(o);
  std::vector<Rejection> rejections;
  const auto records = load_labeled(c, err, &rejections);
  const auto dir = prepare_out_dir(c);
  write_corpus_jsonl(dir / "cohort.jsonl", records);
  std::string rej;
  for (const auto& r : rejections) {
    rej += json({{"row", r.row}, {"note_id", r.note_id}, {"reason", r.reason}}).dump() + "\n";
  }
  write_file(dir / "rejections.jsonl", rej);

  const auto folds = stratified_folds(records, c.folds, c.seed);
  json jf = json::array();
  for (const auto& f : folds) jf.push_back({{"train_ids", f.train_ids}, {"test_ids", f.test_ids}});
  write_json(dir / "folds.json", {{"k", c.folds}, {"seed", c.seed}, {"folds", jf}});

  std::size_t positives = 0;
  for (const auto& r : records) positives += *r.label == 1 ? 1 : 0;
  json summary = {{"n_records", records.size()},
                  {"n_rejected", rejections.size()},
                  {"label_counts", {{"0", records.size() - positives}, {"1", positives}}},
                  {"folds", c.folds}};
  const bool had_labels = std::none_of(records.begin(), records.end(),
                                       [](const NoteRecord& r) { return !r.label; });
  if (had_labels) summary["los_threshold_days"] = los_threshold(records, c.cohort);
  write_json(dir / "ingest_summary.json", summary);
  out << "ingested " << records.size() << " notes (" << rejections.size() << " rejected) into "
      << dir.string() << "\n";
  return 0;
}

int cmd_keywords(const Options& o, std::ostream& out, std::ostream& err) {
  const auto c = resolve_config(o);
  const auto workers = c.resolved_workers();
  const auto data = prepare(load_labeled(c, err), c, false, workers);
  const auto dir = prepare_out_dir(c);
  std::string lines;
  std::vector<NoteRecord> distilled;
  for (const auto& p : data) {
    json kp = json::array();
    for (const auto& k : p.keyphrases) kp.push_back({{"surface", k.surface}, {"n", k.n}, {"score", k.score}});
    json ents = json::array();
    for (const auto& e : p.entities) {
      ents.push_back({{"surface", e.surface}, {"category", to_string(e.category)}});
    }
    const auto text = distill_note(p.keyphrases);
    lines += json({{"note_id", p.record.note_id},
                   {"keyphrases", kp},
                   {"entities", ents},
                   {"distilled", text}})
                 .dump() +
             "\n";
    NoteRecord r = p.record;
    r.text = text;
    distilled.push_back(std::move(r));
  }
  write_file(dir / "keywords.jsonl", lines);
  write_corpus_jsonl(dir / "distilled_corpus.jsonl", distilled);
  out << "extracted keywords for " << data.size() << " notes into " << dir.string() << "\n";
  return 0;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const auto c = resolve_config(o);
  const auto workers = c.resolved_workers();
  const bool distilled = distilled_mode(o.input_mode);
  const auto records = load_labeled(c, err);
  const auto data = prepare(records, c, distilled, workers);
  const auto dir = prepare_out_dir(c);
  const auto texts = labeled_texts(data);
  const auto folds = stratified_folds(records, c.folds, c.seed);
  const ModelFactory factory = [&](std::span<const LabeledText> train) {
    return make_builtin_handle(train_truncated(train, c), c.classifier.max_tokens, workers);
  };
  const auto report = evaluate_cv(texts, folds, factory);
  json j = eval_json(report);
  j["input"] = o.input_mode;
  j["max_tokens"] = c.classifier.max_tokens;
  j["folds"] = c.folds;
  write_json(dir / "eval_report.json", j);
  train_truncated(texts, c)->save(dir / "model.json");
  out << "macro-F1 " << format_2dp(report.macro_f1_summary.mean) << " +/- "
      << format_2dp(report.macro_f1_summary.std) << " over " << c.folds << " folds ("
      << o.input_mode << ", " << c.classifier.max_tokens << " tokens)\n";
  return 0;
}

int cmd_explain(const Options& o, std::ostream& out, std::ostream& err) {
  auto c = resolve_config(o);
  if (o.max_notes) c.explain.max_notes = *o.max_notes;
  const auto workers = c.resolved_workers();
  const bool distilled = distilled_mode(o.input_mode);
  if (o.method != "focused" && o.method != "classical" && o.method != "both") {
    throw ValidationError("--method must be focused, classical or both");
  }
  const auto all = prepare(load_labeled(c, err), c, distilled, workers);
  const auto handle = make_handle(c, all, workers);
  const auto selected = first_n(all, c.explain.max_notes);
  const auto dir = prepare_out_dir(c);

  std::vector<std::string> lines(selected.size());
  std::vector<std::vector<std::string>> warnings(selected.size());
  parallel_for(selected.size(), workers, [&](std::size_t i) {
    const auto& p = selected[i];
    if (o.method != "classical") {
      const auto focus = build_focus_set(p.keyphrases, p.entities, p.note, c.explain.max_keyphrases);
      warnings[i] = focus.warnings;
      lines[i] += explain(p.note, focus, handle, c.surrogate, c.explain.rank_by).to_json_line() + "\n";
    }
    if (o.method != "focused") {
      lines[i] += classical_lime(p.note, handle, c.surrogate, c.explain.classical_max_elements,
                                 c.explain.rank_by)
                      .to_json_line() +
                  "\n";
    }
  });
  std::string all_lines;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    all_lines += lines[i];
    dropped += warnings[i].size();
  }
  if (dropped > 0) {
    // Phrases can span removed short tokens, so not every keyphrase occurs verbatim.
    err << "warning: " << dropped << " focus element(s) without a verbatim occurrence were dropped";
    err << " (first: " << std::find_if(warnings.begin(), warnings.end(), [](const auto& w) {
             return !w.empty();
           })->front()
        << ")\n";
  }
  write_file(dir / "explanations.jsonl", all_lines);
  out << "explained " << selected.size() << " notes into " << (dir / "explanations.jsonl").string()
      << "\n";
  return 0;
}

int cmd_fidelity(const Options& o, std::ostream& out, std::ostream& err) {
  const auto c = resolve_config(o);
  const auto workers = c.resolved_workers();
  const bool distilled = distilled_mode(o.input_mode);
  const fs::path expl_path =
      o.explanations.empty() ? fs::path(c.io.out_dir) / "explanations.jsonl" : fs::path(o.explanations);
  std::vector<Explanation> explanations;
  {
    std::istringstream in(read_file(expl_path));
    std::string line;
    while (std::getline(in, line)) {
      if (!trim(line).empty()) explanations.push_back(Explanation::from_json_line(line));
    }
  }
  if (explanations.empty()) throw ValidationError("no explanations in " + expl_path.string());
  const auto all = prepare(load_labeled(c, err), c, distilled, workers);
  std::map<std::string, const Prepared*> by_id;
  for (const auto& p : all) by_id[p.record.note_id] = &p;
  const auto handle = make_handle(c, all, workers);
  const auto dir = prepare_out_dir(c);

  std::vector<DeletionCurve> curves(explanations.size());
  parallel_for(explanations.size(), workers, [&](std::size_t i) {
    const auto it = by_id.find(explanations[i].note_id);
    if (it == by_id.end()) {
      throw ValidationError("explanation for unknown note " + explanations[i].note_id);
    }
    curves[i] = deletion_curve(it->second->note, explanations[i], handle, c.fidelity);
  });
  export_fidelity(curves, dir / "fidelity_curves.csv", ExportFormat::csv);
  export_fidelity(curves, dir / "fidelity.svg", ExportFormat::svg);

  std::map<std::string, std::vector<DeletionCurve>> groups;
  for (const auto& cv : curves) groups[cv.method].push_back(cv);
  json methods = json::object();
  for (const auto& [method, group] : groups) {
    const auto agg = aggregate_curves(group);
    methods[method] = {{"mean_auc", agg.mean_auc},
                       {"n_curves", agg.n_curves},
                       {"mean_curve", agg.mean_probability}};
    out << method << ": mean deletion AUC " << format_2dp(agg.mean_auc) << " over "
        << agg.n_curves << " notes\n";
  }
  json notes = json::array();
  for (const auto& cv : curves) notes.push_back({{"note_id", cv.note_id}, {"method", cv.method}, {"auc", cv.auc}});
  write_json(dir / "fidelity_summary.json", {{"input", o.input_mode},
                                             {"max_k", c.fidelity.max_k},
                                             {"methods", methods},
                                             {"notes", notes}});
  return 0;
}

int cmd_reason(const Options& o, std::ostream& out, std::ostream& err) {
  auto c = resolve_config(o);
  if (o.max_notes) c.prompt.max_notes = *o.max_notes;
  apply_llm_env(c.prompt);
  const auto workers = c.resolved_workers();
  const auto data = first_n(prepare(load_labeled(c, err), c, false, workers), c.prompt.max_notes);

  std::optional<MockChatServer> mock;
  std::string endpoint = c.prompt.endpoint;
  std::string model = c.prompt.model_name;
  if (o.mock_llm) {
    mock.emplace();
    endpoint = mock->endpoint();
    if (model.empty()) model = "mock";
  }
  const HttpChatClient client(endpoint, model, c.prompt.timeout);
  const auto dir = prepare_out_dir(c);

  std::vector<ReasoningCase> cases;
  for (const auto& p : data) {
    std::vector<std::string> kws;
    for (std::size_t i = 0; i < p.keyphrases.size() && kws.size() < c.prompt.keyword_count; ++i) {
      kws.push_back(p.keyphrases[i].surface);
    }
    for (const auto& e : p.entities) {
      if (std::find(kws.begin(), kws.end(), e.surface) == kws.end()) kws.push_back(e.surface);
    }
    cases.push_back({p.record.note_id, p.record.text, join(kws, ", ")});
  }
  const auto log_path = dir / "reasoning_runs.jsonl";
  std::error_code ec;
  fs::remove(log_path, ec);
  RunLog log(log_path);
  const auto result = run_reasoning(cases, c.prompt, client, log, workers);

  std::vector<ScoreSheetEntry> sheet;
  for (const auto& cs : cases) {
    if (sheet.size() >= c.prompt.sheet_cases) break;
    const ReasoningRun* full = nullptr;
    const ReasoningRun* hybrid = nullptr;
    for (const auto& r : result.runs) {
      if (r.note_id != cs.note_id || r.failed) continue;
      if (r.prompt_kind == PromptKind::full_text && !full) full = &r;
      if (r.prompt_kind == PromptKind::hybrid && !hybrid) hybrid = &r;
    }
    if (!full || !hybrid) continue;
    sheet.push_back({cs.note_id, summarize_bullets(cs.keywords, full->response_text, c.prompt, client),
                     summarize_bullets(cs.keywords, hybrid->response_text, c.prompt, client)});
  }
  if (!sheet.empty()) {
    write_score_sheet(sheet, c.seed, dir / "score_sheet.csv", dir / "score_sheet_key.csv");
  } else {
    err << "warning: no case has successful runs of both kinds; score sheet skipped\n";
  }

  std::size_t failed = 0;
  for (const auto& r : result.runs) failed += r.failed ? 1 : 0;
  json summaries = json::array();
  for (const auto& s : result.summaries) {
    summaries.push_back({{"prompt_kind", to_string(s.prompt_kind)},
                         {"mean", format_2dp(s.mean)},
                         {"std", format_2dp(s.std)},
                         {"n", s.n},
                         {"single_sample", s.single_sample},
                         {"formatted", s.formatted()}});
    out << to_string(s.prompt_kind) << ": " << s.formatted() << " (n=" << s.n << ")\n";
  }
  write_json(dir / "reasoning_summary.json", {{"endpoint", o.mock_llm ? "mock" : endpoint},
                                              {"model", model},
                                              {"n_cases", cases.size()},
                                              {"n_runs", result.runs.size()},
                                              {"n_failed_runs", failed},
                                              {"summaries", summaries}});
  return 0;
}

SyntheticCorpus head(const SyntheticCorpus& corpus, std::size_t n, bool signal_only) {
  SyntheticCorpus out;
  out.signal_tokens = corpus.signal_tokens;
  for (std::size_t i = 0; i < corpus.notes.size() && out.notes.size() < n; ++i) {
    if (signal_only && corpus.truth[i].salient.empty()) continue;
    out.notes.push_back(corpus.notes[i]);
    out.truth.push_back(corpus.truth[i]);
  }
  return out;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream&) {
  const auto c = resolve_config(o);
  const auto workers = c.resolved_workers();
  const auto dir = prepare_out_dir(c);
  const auto corpus = generate_corpus(c.synthetic);
  write_corpus_jsonl(dir / "synthetic_corpus.jsonl", corpus.notes);
  write_ground_truth(dir / "ground_truth.jsonl", corpus.truth);

  ExplainSettings settings;
  settings.rakun = c.rakun;
  settings.surrogate = c.surrogate;
  settings.fidelity = c.fidelity;
  settings.max_keyphrases = c.bench.focus_keyphrases;
  settings.classical_max_elements = c.explain.classical_max_elements;
  settings.rank_by = c.explain.rank_by;

  const auto modality = compare_modalities(corpus.notes, c.rakun, c.bench.modality_max_tokens,
                                           c.folds, c.classifier.train, c.seed, workers);
  const auto fidelity = heldout_fidelity(corpus.notes, settings, c.classifier.train, c.folds,
                                         c.bench.fidelity_max_notes, c.seed, workers);
  std::vector<DeletionCurve> curves = fidelity.focused;
  curves.insert(curves.end(), fidelity.classical.begin(), fidelity.classical.end());
  export_fidelity(curves, dir / "fidelity_curves.csv", ExportFormat::csv);
  export_fidelity(curves, dir / "fidelity.svg", ExportFormat::svg);
  const auto recovery =
      planted_recovery(head(corpus, c.bench.recovery_notes, true), settings, c.bench.recovery_k, workers);
  const auto agreement = occlusion_agreement(head(corpus, c.bench.agreement_notes, true), settings,
                                             c.bench.agreement_max_focus, workers);

  std::size_t positives = 0;
  for (const auto& t : corpus.truth) positives += t.label == 1 ? 1 : 0;
  const json summary = {
      {"corpus", {{"n_notes", corpus.notes.size()}, {"positives", positives}}},
      {"modality",
       {{"max_tokens", c.bench.modality_max_tokens},
        {"raw", eval_json(modality.raw)},
        {"distilled", eval_json(modality.distilled)},
        {"macro_f1_gain",
         modality.distilled.macro_f1_summary.mean - modality.raw.macro_f1_summary.mean}}},
      {"fidelity",
       {{"n_notes", fidelity.focused.size()},
        {"focused_mean_auc", fidelity.focused_mean_auc},
        {"classical_mean_auc", fidelity.classical_mean_auc},
        {"focused_win_rate", fidelity.focused_win_rate}}},
      {"recovery",
       {{"k", c.bench.recovery_k},
        {"n_notes", recovery.note_ids.size()},
        {"mean_precision_at_k", recovery.mean_precision_at_k},
        {"mean_recall_at_k", recovery.mean_recall_at_k}}},
      {"occlusion_agreement",
       {{"n_notes", agreement.n_notes},
        {"agreements", agreement.agreements},
        {"rate", agreement.rate}}}};
  write_json(dir / "bench_summary.json", summary);
  out << "modality macro-F1: raw " << format_2dp(modality.raw.macro_f1_summary.mean)
      << ", distilled " << format_2dp(modality.distilled.macro_f1_summary.mean) << "\n";
  out << "deletion AUC: focused " << format_2dp(fidelity.focused_mean_auc) << ", classical "
      << format_2dp(fidelity.classical_mean_auc) << "\n";
  out << "precision@" << c.bench.recovery_k << ": " << format_2dp(recovery.mean_precision_at_k)
      << "; occlusion top-1 agreement: " << format_2dp(agreement.rate) << "\n";
  out << "summary written to " << (dir / "bench_summary.json").string() << "\n";
  return 0;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream&) {
  const auto c = resolve_config(o);
  const fs::path dir = c.io.out_dir;
  std::vector<fs::path> sources;
  for (const auto& s : o.from_dirs) sources.emplace_back(s);
  if (sources.empty()) throw ValidationError("report needs at least one --from directory");
  prepare_out_dir(c);

  json merged = json::object();
  std::size_t n_svg = 0;
  for (const auto& src : sources) {
    if (!fs::is_directory(src)) throw IoError("not a directory: " + src.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(src)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    const std::string tag = src.lexically_normal().filename().empty()
                                ? src.lexically_normal().parent_path().filename().string()
                                : src.lexically_normal().filename().string();
    for (const auto& f : files) {
      if (f.extension() == ".json") {
        try {
          merged[tag][f.filename().string()] = json::parse(read_file(f));
        } catch (const json::parse_error& e) {
          throw ValidationError("malformed JSON in " + f.string() + ": " + e.what());
        }
      } else if (f.extension() == ".svg") {
        const auto target = dir / (tag + "_" + f.filename().string());
        if (fs::equivalent(f.parent_path(), dir)) continue;
        write_file(target, read_file(f));
        ++n_svg;
      }
    }
  }
  write_json(dir / "report.json", merged);
  out << "merged " << merged.size() << " source(s); " << n_svg << " figure(s) copied into "
      << dir.string() << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Keyword distillation, focused LIME and deletion-curve fidelity toolkit", "ttxai"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config_path, "TOML run configuration");
  app.add_option("--seed", o.seed, "Global seed (overrides the config)");
  app.add_option("--workers", o.workers, "Worker threads (default: logical cores)");
  app.add_option("--out", o.out, "Output directory");

  auto add_corpus = [&](CLI::App* sub) {
    sub->add_option("--corpus", o.corpus, "Corpus file (JSONL or CSV)");
    sub->add_option("--format", o.format, "Corpus format: jsonl or csv");
    sub->add_option("--threshold-mode", o.threshold_mode, "LOS split: median or fixed")
        ->check(CLI::IsMember({"median", "fixed"}));
    sub->add_option("--threshold-days", o.threshold_days, "Fixed LOS threshold in days");
  };
  auto add_classifier = [&](CLI::App* sub) {
    sub->add_option("--input", o.input_mode, "Classifier input: raw or distilled")
        ->check(CLI::IsMember({"raw", "distilled"}));
    sub->add_option("--max-tokens", o.max_tokens, "Truncate classifier inputs to this many tokens");
    sub->add_option("--classifier", o.classifier_kind, "builtin, subprocess or http")
        ->check(CLI::IsMember({"builtin", "subprocess", "http"}));
    sub->add_option("--endpoint", o.classifier_endpoint, "Sidecar command or URL");
    sub->add_option("--model", o.model, "Saved baseline model (JSON)");
    sub->add_option("--gazetteer", o.gazetteer, "Entity gazetteer (TSV)");
  };

  auto* ingest = app.add_subcommand("ingest", "Load a corpus, binarize LOS and build folds");
  add_corpus(ingest);
  ingest->add_option("--folds", o.folds, "Number of CV folds");

  auto* keywords = app.add_subcommand("keywords", "Extract keyphrases and distill notes");
  add_corpus(keywords);
  keywords->add_option("--gazetteer", o.gazetteer, "Entity gazetteer (TSV)");

  auto* train = app.add_subcommand("train", "Cross-validate and fit the baseline classifier");
  add_corpus(train);
  train->add_option("--folds", o.folds, "Number of CV folds");
  train->add_option("--input", o.input_mode, "raw or distilled")
      ->check(CLI::IsMember({"raw", "distilled"}));
  train->add_option("--max-tokens", o.max_tokens, "Truncate inputs to this many tokens");

  auto* explain_cmd = app.add_subcommand("explain", "Focused and/or classical LIME");
  add_corpus(explain_cmd);
  add_classifier(explain_cmd);
  explain_cmd->add_option("--method", o.method, "focused, classical or both")
      ->check(CLI::IsMember({"focused", "classical", "both"}));
  explain_cmd->add_option("--max-notes", o.max_notes, "Explain the first N notes");

  auto* fidelity = app.add_subcommand("fidelity", "Deletion curves, AUC and plots");
  add_corpus(fidelity);
  add_classifier(fidelity);
  fidelity->add_option("--explanations", o.explanations, "Explanations JSONL");

  auto* reason = app.add_subcommand("reason", "LLM reasoning prompts, judging and score sheet");
  add_corpus(reason);
  reason->add_option("--gazetteer", o.gazetteer, "Entity gazetteer (TSV)");
  reason->add_option("--llm-endpoint", o.llm_endpoint, "Chat-completion URL");
  reason->add_option("--llm-model", o.llm_model, "Model name sent to the endpoint");
  reason->add_flag("--mock-llm", o.mock_llm, "Use the built-in offline mock endpoint");
  reason->add_option("--max-notes", o.max_notes, "Use the first N notes");

  auto* bench = app.add_subcommand("bench", "Synthetic benchmark and directional comparisons");
  bench->add_option("--spec", o.config_path, "Benchmark configuration (same format as --config)");

  auto* report = app.add_subcommand("report", "Merge output directories into one report");
  report->add_option("--from", o.from_dirs, "Output directories to merge")->expected(1, -1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*ingest) return cmd_ingest(o, out, err);
    if (*keywords) return cmd_keywords(o, out, err);
    if (*train) return cmd_train(o, out, err);
    if (*explain_cmd) return cmd_explain(o, out, err);
    if (*fidelity) return cmd_fidelity(o, out, err);
    if (*reason) return cmd_reason(o, out, err);
    if (*bench) return cmd_bench(o, out, err);
    if (*report) return cmd_report(o, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace ttxai
