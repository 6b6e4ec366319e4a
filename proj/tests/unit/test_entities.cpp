#include <gtest/gtest.h>

#include <cctype>

#include "ttxai/entities.hpp"
#include "ttxai/error.hpp"
#include "ttxai/rng.hpp"
#include "ttxai/text.hpp"

using namespace ttxai;

namespace {

std::vector<std::string> surfaces(const std::vector<EntityMatch>& ms) {
  std::vector<std::string> out;
  for (const auto& m : ms) out.push_back(m.surface);
  return out;
}

}  // namespace

TEST(Entities, LeftmostLongest) {
  const auto gaz = parse_gazetteer("kidney\tOTHER\nkidney stone\tOTHER\n");
  const auto ms = match_entities(tokenize_note("n", "kidney stone pain"), gaz);
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_EQ(ms[0].surface, "kidney stone");
  EXPECT_EQ(ms[0].token_start, 0u);
  EXPECT_EQ(ms[0].token_end, 2u);
}

TEST(Entities, DefaultExclusionsDropDosage) {
  const auto gaz = parse_gazetteer("ciprofloxacin\tDRUG\n500mg\tDOSAGE\n");
  const auto ms = match_entities(tokenize_note("n", "ciprofloxacin 500mg"), gaz);
  ASSERT_EQ(ms.size(), 2u);
  const auto kept = filter_categories(ms, default_excluded_categories());
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].surface, "ciprofloxacin");
  EXPECT_EQ(kept[0].category, EntityCategory::DRUG);
}

TEST(Entities, MalformedGazetteerRows) {
  EXPECT_THROW(parse_gazetteer("aspirin\tNOT_A_CATEGORY\n"), ValidationError);
  EXPECT_THROW(parse_gazetteer("aspirin\n"), ValidationError);
  EXPECT_THROW(parse_gazetteer("aspirin\tDRUG\naspirin\tFORM\n"), ValidationError);
  EXPECT_THROW(parse_gazetteer("a b c d e f\tOTHER\n"), ValidationError);
  EXPECT_NO_THROW(parse_gazetteer("# comment\n\naspirin\tDRUG\n"));
}

TEST(Entities, StarterLexiconLoads) {
  const auto gaz = load_gazetteer(TTXAI_FIXTURES_DIR "/gazetteer/clinical_lexicon.tsv");
  EXPECT_GT(gaz.entries.size(), 30u);
  EXPECT_EQ(gaz.entries.at("piperacillin tazobactam"), EntityCategory::DRUG);
  EXPECT_THROW(load_gazetteer("/nonexistent.tsv"), IoError);
}

TEST(EntitiesProperty, MatchesNeverOverlapAndIgnoreCase) {
  const auto gaz = load_gazetteer(TTXAI_FIXTURES_DIR "/gazetteer/clinical_lexicon.tsv");
  std::vector<std::string> words;
  for (const auto& [surface, cat] : gaz.entries) {
    for (auto w : split_whitespace(surface)) words.emplace_back(w);
  }
  words.push_back("patient");
  words.push_back("with");
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::string text;
    for (int i = 0; i < 30; ++i) text += words[rng.below(words.size())] + " ";
    const auto ms = match_entities(tokenize_note("n", text), gaz);
    for (std::size_t i = 1; i < ms.size(); ++i) EXPECT_LE(ms[i - 1].token_end, ms[i].token_start);

    std::string upper = text;
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    EXPECT_EQ(surfaces(match_entities(tokenize_note("n", upper), gaz)), surfaces(ms));

    std::set<EntityCategory> excluded{static_cast<EntityCategory>(rng.below(8))};
    const auto kept = filter_categories(ms, excluded);
    std::size_t j = 0;
    for (const auto& m : ms) {
      if (j < kept.size() && kept[j].token_start == m.token_start) ++j;
    }
    EXPECT_EQ(j, kept.size());  // subsequence of the input
  }
}
