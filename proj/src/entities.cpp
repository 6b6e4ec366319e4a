#include "ttxai/entities.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "ttxai/error.hpp"

namespace ttxai {

namespace {
constexpr std::array<std::pair<EntityCategory, std::string_view>, 8> kCategoryNames{{
    {EntityCategory::DRUG, "DRUG"},
    {EntityCategory::STRENGTH, "STRENGTH"},
    {EntityCategory::ROUTE, "ROUTE"},
    {EntityCategory::FORM, "FORM"},
    {EntityCategory::DOSAGE, "DOSAGE"},
    {EntityCategory::FREQUENCY, "FREQUENCY"},
    {EntityCategory::DURATION, "DURATION"},
    {EntityCategory::OTHER, "OTHER"},
}};
}  // namespace

std::string_view to_string(EntityCategory c) {
  for (const auto& [cat, name] : kCategoryNames) {
    if (cat == c) return name;
  }
  return "OTHER";
}

EntityCategory parse_entity_category(std::string_view name) {
  std::string upper(trim(name));
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (const auto& [cat, n] : kCategoryNames) {
    if (n == upper) return cat;
  }
  throw ValidationError("unknown entity category: " + std::string(name));
}

void Gazetteer::add(std::string_view surface, EntityCategory category) {
  const auto words = tokenize_words(surface);
  if (words.empty()) throw ValidationError("gazetteer: empty surface form");
  if (words.size() > kMaxEntityTokens) {
    throw ValidationError("gazetteer: surface '" + std::string(surface) + "' exceeds " +
                          std::to_string(kMaxEntityTokens) + " tokens");
  }
  const auto key = join(words);
  const auto [it, inserted] = entries.emplace(key, category);
  if (!inserted && it->second != category) {
    throw ValidationError("gazetteer: '" + key + "' listed as both " +
                          std::string(to_string(it->second)) + " and " +
                          std::string(to_string(category)));
  }
}

Gazetteer parse_gazetteer(std::string_view content) {
  Gazetteer g;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ValidationError("gazetteer line " + std::to_string(line_no) +
                            ": expected surface<TAB>category");
    }
    try {
      g.add(line.substr(0, tab), parse_entity_category(line.substr(tab + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError("gazetteer line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return g;
}

Gazetteer load_gazetteer(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read gazetteer: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_gazetteer(ss.str());
}

std::vector<EntityMatch> match_entities(const TokenizedNote& note, const Gazetteer& gazetteer) {
  std::vector<EntityMatch> matches;
  const auto& tokens = note.tokens;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(kMaxEntityTokens, tokens.size() - i);
    bool matched = false;
    for (std::size_t len = longest; len >= 1; --len) {
      std::string key = tokens[i];
      for (std::size_t j = i + 1; j < i + len; ++j) {
        key.push_back(' ');
        key += tokens[j];
      }
      if (auto it = gazetteer.entries.find(key); it != gazetteer.entries.end()) {
        matches.push_back({std::move(key), it->second, i, i + len});
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return matches;
}

std::set<EntityCategory> default_excluded_categories() {
  return {EntityCategory::DOSAGE, EntityCategory::FREQUENCY};
}

std::vector<EntityMatch> filter_categories(std::vector<EntityMatch> matches,
                                           const std::set<EntityCategory>& excluded) {
  std::erase_if(matches, [&](const EntityMatch& m) { return excluded.count(m.category) > 0; });
  return matches;
}

}  // namespace ttxai
