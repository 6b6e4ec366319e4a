#include "ttxai/explain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

#include "ttxai/error.hpp"
#include "ttxai/rng.hpp"

namespace ttxai {

using json = nlohmann::json;

std::string_view to_string(FocusSource source) {
  switch (source) {
    case FocusSource::keyword:
      return "keyword";
    case FocusSource::entity:
      return "entity";
    case FocusSource::token:
      return "token";
  }
  return "token";
}

std::vector<TokenRange> find_occurrences(std::span<const std::string> tokens,
                                         std::string_view surface) {
  std::vector<std::string> parts;
  for (auto p : split_whitespace(surface)) parts.emplace_back(p);
  std::vector<TokenRange> out;
  if (parts.empty() || parts.size() > tokens.size()) return out;
  std::size_t i = 0;
  while (i + parts.size() <= tokens.size()) {
    if (std::equal(parts.begin(), parts.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
      out.push_back({i, i + parts.size()});
      i += parts.size();
    } else {
      ++i;
    }
  }
  return out;
}

FocusSet build_focus_set(std::span<const Keyphrase> keyphrases,
                         std::span<const EntityMatch> entities, const TokenizedNote& note,
                         std::size_t max_keyphrases) {
  FocusSet focus;
  focus.note_id = note.note_id;
  std::set<std::string> seen;
  auto add = [&](const std::string& surface, FocusSource source) {
    if (!seen.insert(surface).second) return;
    auto occ = find_occurrences(note.tokens, surface);
    if (occ.empty()) {
      focus.warnings.push_back(std::string(to_string(source)) + " '" + surface +
                               "' does not occur verbatim in note " + note.note_id +
                               "; dropped");
      return;
    }
    focus.elements.push_back({surface, source, std::move(occ)});
  };
  const auto n_kp = std::min(max_keyphrases, keyphrases.size());
  for (std::size_t i = 0; i < n_kp; ++i) add(keyphrases[i].surface, FocusSource::keyword);
  for (const auto& e : entities) add(e.surface, FocusSource::entity);
  if (focus.elements.empty()) {
    throw ValidationError("empty focus set for note " + note.note_id);
  }
  return focus;
}

FocusSet token_focus_set(const TokenizedNote& note, std::size_t max_elements) {
  struct Entry {
    std::size_t count = 0;
    std::size_t first = 0;
    std::vector<TokenRange> occ;
  };
  std::map<std::string, Entry> entries;
  for (std::size_t i = 0; i < note.tokens.size(); ++i) {
    auto [it, inserted] = entries.try_emplace(note.tokens[i]);
    if (inserted) it->second.first = i;
    ++it->second.count;
    it->second.occ.push_back({i, i + 1});
  }
  std::vector<std::pair<std::string, Entry>> ordered(entries.begin(), entries.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return a.second.count != b.second.count ? a.second.count > b.second.count
                                            : a.second.first < b.second.first;
  });
  if (ordered.size() > max_elements) ordered.resize(max_elements);
  // Present elements in note order.
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.second.first < b.second.first; });
  FocusSet focus;
  focus.note_id = note.note_id;
  for (auto& [surface, e] : ordered) {
    focus.elements.push_back({surface, FocusSource::token, std::move(e.occ)});
  }
  if (focus.elements.empty()) throw ValidationError("empty focus set for note " + note.note_id);
  return focus;
}

void SurrogateConfig::validate() const {
  if (n_samples < 2) throw ValidationError("surrogate: n_samples must be >= 2");
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) {
    throw ValidationError("surrogate: keep_prob must be in [0,1]");
  }
  if (!(kernel_width > 0.0)) throw ValidationError("surrogate: kernel_width must be > 0");
  if (!(ridge_lambda >= 0.0)) throw ValidationError("surrogate: ridge_lambda must be >= 0");
}

std::vector<Mask> sample_perturbations(const FocusSet& focus, const SurrogateConfig& config) {
  config.validate();
  const std::size_t d = focus.elements.size();
  if (d == 0) throw ValidationError("sample_perturbations: empty focus set");
  Rng rng(mix_seed(config.seed, hash_string(focus.note_id)));
  std::vector<Mask> masks;
  masks.reserve(config.n_samples);
  masks.emplace_back(d, 1);
  auto draw = [&](Mask& m) {
    bool any = false;
    for (auto& bit : m) {
      bit = rng.bernoulli(config.keep_prob) ? 1 : 0;
      any = any || bit;
    }
    return any;
  };
  for (std::size_t s = 1; s < config.n_samples; ++s) {
    Mask m(d);
    if (!draw(m)) draw(m);
    masks.push_back(std::move(m));
  }
  return masks;
}

void close_deletions(std::span<const std::string> tokens, std::span<const std::string> surfaces,
                     std::vector<std::uint8_t>& deleted) {
  std::vector<std::string_view> phrases;
  for (const auto& s : surfaces) {
    if (s.find(' ') != std::string::npos) phrases.push_back(s);
  }
  if (phrases.empty()) return;
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<std::size_t> kept_index;
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (deleted[i]) continue;
      kept_index.push_back(i);
      kept.push_back(tokens[i]);
    }
    for (const auto phrase : phrases) {
      for (const auto& r : find_occurrences(kept, phrase)) {
        for (std::size_t j = r.begin; j < r.end; ++j) {
          if (!deleted[kept_index[j]]) {
            deleted[kept_index[j]] = 1;
            changed = true;
          }
        }
      }
    }
  }
}

std::string render_perturbed_text(const TokenizedNote& note, const FocusSet& focus,
                                  const Mask& mask) {
  if (mask.size() != focus.elements.size()) {
    throw ValidationError("render_perturbed_text: mask length does not match focus set");
  }
  std::vector<std::uint8_t> deleted(note.tokens.size(), 0);
  for (std::size_t e = 0; e < mask.size(); ++e) {
    if (mask[e]) continue;
    for (const auto& r : focus.elements[e].occurrences) {
      for (std::size_t i = r.begin; i < r.end && i < deleted.size(); ++i) deleted[i] = 1;
    }
  }
  std::vector<std::string> masked;
  for (std::size_t e = 0; e < mask.size(); ++e) {
    if (!mask[e]) masked.push_back(focus.elements[e].surface);
  }
  close_deletions(note.tokens, masked, deleted);
  std::string out;
  for (std::size_t i = 0; i < note.tokens.size(); ++i) {
    if (deleted[i]) continue;
    if (!out.empty()) out.push_back(' ');
    out += note.tokens[i];
  }
  return out;
}

double mask_cosine_distance(const Mask& mask) {
  std::size_t kept = 0;
  for (auto b : mask) kept += b != 0;
  if (kept == 0 || mask.empty()) return 1.0;
  // cos(m, 1) = |m|_1 / (sqrt(|m|_1) * sqrt(d)) for a binary mask.
  return 1.0 - std::sqrt(static_cast<double>(kept) / static_cast<double>(mask.size()));
}

SurrogateFit fit_surrogate(std::span<const Mask> masks, std::span<const double> targets,
                           const SurrogateConfig& config) {
  config.validate();
  if (masks.size() != targets.size()) {
    throw ValidationError("fit_surrogate: masks and targets differ in length");
  }
  if (masks.size() < 2) throw ValidationError("fit_surrogate: need at least two samples");
  const std::size_t d = masks.front().size();
  const auto dim = static_cast<Eigen::Index>(d + 1);

  // Accumulate X^T W X and X^T W y with X = [1, mask].
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd row(dim);
  const double width_sq = config.kernel_width * config.kernel_width;
  for (std::size_t s = 0; s < masks.size(); ++s) {
    if (masks[s].size() != d) throw ValidationError("fit_surrogate: ragged masks");
    const double dist = mask_cosine_distance(masks[s]);
    const double w = std::isinf(width_sq) ? 1.0 : std::exp(-dist * dist / width_sq);
    row[0] = 1.0;
    for (std::size_t j = 0; j < d; ++j) row[static_cast<Eigen::Index>(j + 1)] = masks[s][j];
    gram.selfadjointView<Eigen::Lower>().rankUpdate(row, w);
    rhs += (w * targets[s]) * row;
  }
  Eigen::MatrixXd system = gram.selfadjointView<Eigen::Lower>();
  for (Eigen::Index j = 1; j < dim; ++j) system(j, j) += config.ridge_lambda;

  Eigen::VectorXd beta;
  if (config.ridge_lambda > 0.0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    if (ldlt.info() != Eigen::Success) throw ValidationError("fit_surrogate: singular system");
    beta = ldlt.solve(rhs);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(system);
    if (qr.rank() < dim) throw ValidationError("fit_surrogate: singular system");
    beta = qr.solve(rhs);
  }
  SurrogateFit fit;
  fit.intercept = beta[0];
  fit.weights.assign(beta.data() + 1, beta.data() + dim);
  return fit;
}

void rank_attributions(std::vector<Attribution>& attributions, RankBy rank_by) {
  std::stable_sort(attributions.begin(), attributions.end(),
                   [rank_by](const Attribution& a, const Attribution& b) {
                     return rank_by == RankBy::absolute ? std::abs(a.weight) > std::abs(b.weight)
                                                        : a.weight > b.weight;
                   });
}

std::string Explanation::to_json_line() const {
  json attr = json::array();
  for (const auto& a : attributions) attr.push_back({a.surface, a.weight});
  json j = {{"note_id", note_id}, {"method", method},   {"attributions", attr},
            {"intercept", intercept}, {"seed", seed}};
  return j.dump();
}

Explanation Explanation::from_json_line(std::string_view line) {
  Explanation e;
  try {
    const auto j = json::parse(line);
    e.note_id = j.at("note_id").get<std::string>();
    e.method = j.at("method").get<std::string>();
    e.intercept = j.at("intercept").get<double>();
    e.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& a : j.at("attributions")) {
      e.attributions.push_back({a.at(0).get<std::string>(), a.at(1).get<double>()});
    }
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed explanation record: ") + ex.what());
  }
  return e;
}

Explanation explain(const TokenizedNote& note, const FocusSet& focus,
                    const ClassifierHandle& handle, const SurrogateConfig& config,
                    RankBy rank_by, std::string method) {
  const auto masks = sample_perturbations(focus, config);
  std::vector<std::string> texts;
  texts.reserve(masks.size());
  for (const auto& m : masks) texts.push_back(render_perturbed_text(note, focus, m));
  const auto probs = handle.predict_proba(texts);
  std::vector<double> targets;
  targets.reserve(probs.size());
  for (const auto& p : probs) targets.push_back(p.p1);
  const auto fit = fit_surrogate(masks, targets, config);

  Explanation out;
  out.note_id = note.note_id;
  out.method = std::move(method);
  out.intercept = fit.intercept;
  out.seed = config.seed;
  for (std::size_t i = 0; i < focus.elements.size(); ++i) {
    out.attributions.push_back({focus.elements[i].surface, fit.weights[i]});
  }
  rank_attributions(out.attributions, rank_by);
  return out;
}

Explanation classical_lime(const TokenizedNote& note, const ClassifierHandle& handle,
                           const SurrogateConfig& config, std::size_t max_elements,
                           RankBy rank_by) {
  return explain(note, token_focus_set(note, max_elements), handle, config, rank_by,
                 "classical");
}

}  // namespace ttxai
