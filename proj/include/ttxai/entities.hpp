#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ttxai/corpus.hpp"

namespace ttxai {

// Med7's seven categories plus a catch-all.
enum class EntityCategory { DRUG, STRENGTH, ROUTE, FORM, DOSAGE, FREQUENCY, DURATION, OTHER };

std::string_view to_string(EntityCategory c);
EntityCategory parse_entity_category(std::string_view name);

inline constexpr std::size_t kMaxEntityTokens = 5;

struct Gazetteer {
  // Key: tokenized, lowercased surface joined by single spaces.
  std::map<std::string, EntityCategory> entries;

  /// Adds one entry; the surface is run through the note tokenizer.
  /// Throws ValidationError on an empty or over-long surface, or when the
  /// surface is already present with a different category.
  void add(std::string_view surface, EntityCategory category);
};

/// Parses "surface<TAB>category" rows. Blank lines and lines starting with
/// '#' are ignored.
Gazetteer parse_gazetteer(std::string_view content);
Gazetteer load_gazetteer(const std::filesystem::path& path);

struct EntityMatch {
  std::string surface;
  EntityCategory category = EntityCategory::OTHER;
  std::size_t token_start = 0;
  std::size_t token_end = 0;  // exclusive
};

/// Leftmost-longest greedy matching over windows of up to five tokens.
std::vector<EntityMatch> match_entities(const TokenizedNote& note, const Gazetteer& gazetteer);

std::set<EntityCategory> default_excluded_categories();

std::vector<EntityMatch> filter_categories(std::vector<EntityMatch> matches,
                                           const std::set<EntityCategory>& excluded);

}  // namespace ttxai
