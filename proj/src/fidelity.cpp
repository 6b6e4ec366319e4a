#include "ttxai/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ttxai/error.hpp"

namespace ttxai {

void FidelityConfig::validate() const {
  if (max_k < 1) throw ValidationError("fidelity: max_k must be >= 1");
}

double deletion_auc(std::span<const double> p) {
  if (p.size() < 2) throw ValidationError("deletion_auc: curve needs at least two points");
  double area = 0.0;
  for (std::size_t k = 1; k < p.size(); ++k) area += 0.5 * (p[k - 1] + p[k]);
  return area / static_cast<double>(p.size() - 1);
}

DeletionCurve deletion_curve(const TokenizedNote& note, const Explanation& explanation,
                             const ClassifierHandle& handle, const FidelityConfig& config) {
  config.validate();
  if (explanation.note_id != note.note_id) {
    throw ValidationError("deletion_curve: explanation for " + explanation.note_id +
                          " applied to note " + note.note_id);
  }
  if (explanation.attributions.empty()) throw ValidationError("deletion_curve: empty explanation");
  auto ranked = explanation.attributions;
  rank_attributions(ranked, config.rank_by);
  const std::size_t K = std::min(config.max_k, ranked.size());

  std::vector<std::uint8_t> deleted(note.tokens.size(), 0);
  std::vector<std::string> texts;
  texts.reserve(K + 1);
  auto render = [&] {
    std::string out;
    for (std::size_t i = 0; i < note.tokens.size(); ++i) {
      if (deleted[i]) continue;
      if (!out.empty()) out.push_back(' ');
      out += note.tokens[i];
    }
    return out;
  };
  texts.push_back(render());
  std::vector<std::string> removed;
  for (std::size_t k = 0; k < K; ++k) {
    for (const auto& r : find_occurrences(note.tokens, ranked[k].surface)) {
      std::fill(deleted.begin() + static_cast<std::ptrdiff_t>(r.begin),
                deleted.begin() + static_cast<std::ptrdiff_t>(r.end), 1);
    }
    removed.push_back(ranked[k].surface);
    close_deletions(note.tokens, removed, deleted);
    texts.push_back(render());
  }
  const auto probs = handle.predict_proba(texts);
  DeletionCurve curve;
  curve.note_id = note.note_id;
  curve.method = explanation.method;
  for (const auto& p : probs) curve.probabilities.push_back(p.p1);
  curve.auc = deletion_auc(curve.probabilities);
  return curve;
}

namespace {

double interpolate(const std::vector<double>& p, double fraction) {
  const double pos = fraction * static_cast<double>(p.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= p.size()) return p.back();
  const double t = pos - static_cast<double>(lo);
  return p[lo] + t * (p[lo + 1] - p[lo]);
}

std::map<std::string, std::vector<DeletionCurve>> by_method(std::span<const DeletionCurve> curves) {
  std::map<std::string, std::vector<DeletionCurve>> groups;
  for (const auto& c : curves) groups[c.method].push_back(c);
  return groups;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

AggregateCurve aggregate_curves(std::span<const DeletionCurve> curves) {
  if (curves.empty()) throw ValidationError("aggregate_curves: no curves");
  std::size_t k_max = 0;
  for (const auto& c : curves) {
    if (c.probabilities.size() < 2) throw ValidationError("aggregate_curves: degenerate curve");
    k_max = std::max(k_max, c.probabilities.size() - 1);
  }
  AggregateCurve agg;
  agg.method = curves.front().method;
  agg.n_curves = curves.size();
  agg.rank_fraction.resize(k_max + 1);
  agg.mean_probability.assign(k_max + 1, 0.0);
  for (std::size_t i = 0; i <= k_max; ++i) {
    agg.rank_fraction[i] = static_cast<double>(i) / static_cast<double>(k_max);
  }
  double auc_sum = 0.0;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i <= k_max; ++i) {
      agg.mean_probability[i] += interpolate(c.probabilities, agg.rank_fraction[i]);
    }
    auc_sum += c.auc;
  }
  const double n = static_cast<double>(curves.size());
  for (auto& v : agg.mean_probability) v /= n;
  agg.mean_auc = auc_sum / n;
  return agg;
}

std::string fidelity_csv(std::span<const DeletionCurve> curves) {
  std::ostringstream out;
  out << "note_id,method,k,probability\n";
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.probabilities.size(); ++k) {
      out << csv_escape(c.note_id) << ',' << csv_escape(c.method) << ',' << k << ','
          << fmt(c.probabilities[k]) << '\n';
    }
  }
  out << "\nmethod,rank_fraction,mean_probability,mean_auc,n_curves\n";
  for (const auto& [method, group] : by_method(curves)) {
    const auto agg = aggregate_curves(group);
    for (std::size_t i = 0; i < agg.rank_fraction.size(); ++i) {
      out << csv_escape(method) << ',' << fmt(agg.rank_fraction[i]) << ','
          << fmt(agg.mean_probability[i]) << ',' << fmt(agg.mean_auc) << ',' << agg.n_curves
          << '\n';
    }
  }
  return out.str();
}

std::string fidelity_svg(std::span<const DeletionCurve> curves) {
  if (curves.empty()) throw ValidationError("fidelity_svg: no curves");
  constexpr double kWidth = 640, kHeight = 420, kLeft = 60, kRight = 20, kTop = 30,
                   kBottom = 50;
  constexpr const char* kColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd"};
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
      << "Average deletion curve</text>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
      << "\" y2=\"" << kTop + ph << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + ph << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    const double y = kTop + ph * (1.0 - v);
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_short(v) << "</text>\n";
    const double x = kLeft + pw * v;
    out << "<text x=\"" << x << "\" y=\"" << kTop + ph + 16
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_short(v) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">fraction of top-k removed</text>\n";
  out << "<text x=\"15\" y=\"" << kTop + ph / 2 << "\" font-size=\"12\" transform=\"rotate(-90 15 "
      << kTop + ph / 2 << ")\" text-anchor=\"middle\">P(positive)</text>\n";
  std::size_t idx = 0;
  for (const auto& [method, group] : by_method(curves)) {
    const auto agg = aggregate_curves(group);
    const char* color = kColors[idx % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < agg.rank_fraction.size(); ++i) {
      if (i > 0) out << ' ';
      const double p = std::clamp(agg.mean_probability[i], 0.0, 1.0);
      out << fmt_short(kLeft + pw * agg.rank_fraction[i]) << ','
          << fmt_short(kTop + ph * (1.0 - p));
    }
    out << "\"/>\n";
    const double ly = kTop + 12 + 18.0 * static_cast<double>(idx);
    out << "<g class=\"legend\"><line x1=\"" << kLeft + pw - 170 << "\" y1=\"" << ly
        << "\" x2=\"" << kLeft + pw - 150 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/><text x=\"" << kLeft + pw - 145 << "\" y=\"" << ly + 4
        << "\" font-size=\"11\">" << xml_escape(method) << " (AUC " << fmt_short(agg.mean_auc)
        << ")</text></g>\n";
    ++idx;
  }
  out << "</svg>\n";
  return out.str();
}

void export_fidelity(std::span<const DeletionCurve> curves, const std::filesystem::path& path,
                     ExportFormat format) {
  if (curves.empty()) throw ValidationError("export_fidelity: no curves");
  const std::string body = format == ExportFormat::csv ? fidelity_csv(curves) : fidelity_svg(curves);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path.string());
  out << body;
  if (!out) throw IoError("error while writing: " + path.string());
}

}  // namespace ttxai
