#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ttxai/classifier.hpp"
#include "ttxai/corpus.hpp"
#include "ttxai/explain.hpp"

namespace ttxai {

struct FidelityConfig {
  std::size_t max_k = 20;
  RankBy rank_by = RankBy::signed_weight;

  void validate() const;
};

struct DeletionCurve {
  std::string note_id;
  std::string method;
  std::vector<double> probabilities;  // p_0 .. p_K
  double auc = 0.0;
};

/// (1/K) * sum_{k=1..K} (p_{k-1} + p_k) / 2. Needs at least two points.
double deletion_auc(std::span<const double> probabilities);

/// Removes all occurrences of the top-k ranked attributions cumulatively for
/// k = 0..K, K = min(max_k, #attributions), recording p1 of what remains.
DeletionCurve deletion_curve(const TokenizedNote& note, const Explanation& explanation,
                             const ClassifierHandle& handle, const FidelityConfig& config);

struct AggregateCurve {
  std::string method;
  std::vector<double> rank_fraction;  // K+1 evenly spaced points on [0,1]
  std::vector<double> mean_probability;
  double mean_auc = 0.0;
  std::size_t n_curves = 0;
};

/// Resamples every curve on a normalized rank axis (linear interpolation at
/// K_max + 1 evenly spaced points, K_max the longest curve) and averages
/// pointwise. Throws ValidationError on empty input.
AggregateCurve aggregate_curves(std::span<const DeletionCurve> curves);

enum class ExportFormat { csv, svg };

/// CSV: per-curve rows (note_id, method, k, probability) followed by an
/// aggregate section per method. SVG: one polyline per method with a legend.
void export_fidelity(std::span<const DeletionCurve> curves, const std::filesystem::path& path,
                     ExportFormat format);

std::string fidelity_csv(std::span<const DeletionCurve> curves);
std::string fidelity_svg(std::span<const DeletionCurve> curves);

}  // namespace ttxai
