#include "hopqa/corpus.hpp"
#include "hopqa/error.hpp"
#include "hopqa/synthetic.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace hopqa {
namespace {

using nlohmann::json;
using testing::premise;
using testing::TempDir;

json paragraph(const std::string& title, const std::vector<std::string>& sentences) {
  return json::array({title, sentences});
}

// A bridge entry with ten paragraphs: "Kim Tate" (intermediate), "Lake School"
// (answer-bearing) and eight fillers.
json bridge_entry(const std::string& id) {
  json context = json::array();
  context.push_back(paragraph("Kim Tate", {"Kim Tate is a painter.", " Tate attended Lake School."}));
  for (int i = 0; i < 4; ++i) context.push_back(paragraph("Filler " + std::to_string(i), {"Nothing here."}));
  context.push_back(paragraph("Lake School", {"Lake School is located in Summerlin, Nevada."}));
  for (int i = 4; i < 8; ++i) context.push_back(paragraph("Filler " + std::to_string(i), {"Nothing here."}));
  return json{{"_id", id},
              {"question", "Where is the school that Kim Tate attended located?"},
              {"answer", "Summerlin"},
              {"type", "bridge"},
              {"supporting_facts", json::array({json::array({"Kim Tate", 1}), json::array({"Lake School", 0})})},
              {"context", context}};
}

TEST(ParseHotpotqa, EmptyArray) { EXPECT_TRUE(parse_hotpotqa(json::array()).empty()); }

TEST(ParseHotpotqa, TenParagraphsGiveTenPremisesInOrder) {
  const auto records = parse_hotpotqa(json::array({bridge_entry("x")}));
  ASSERT_EQ(records.size(), 1u);
  ASSERT_EQ(records[0].premises.size(), 10u);
  EXPECT_EQ(records[0].premises[0].title, "Kim Tate");
  EXPECT_EQ(records[0].premises[5].title, "Lake School");
  EXPECT_EQ(records[0].premises[0].paragraph_text, "Kim Tate is a painter. Tate attended Lake School.");
  EXPECT_EQ(records[0].supporting_titles, (std::vector<std::string>{"Kim Tate", "Lake School"}));
}

TEST(ParseHotpotqa, MissingAnswerNamesTheEntryIndex) {
  json bad = bridge_entry("b");
  bad.erase("answer");
  try {
    parse_hotpotqa(json::array({bridge_entry("a"), bad}));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("entry 1"), std::string::npos) << e.what();
  }
}

TEST(ParseHotpotqa, RejectsNonArrayRoot) { EXPECT_THROW(parse_hotpotqa(json::object()), ParseError); }

TEST(LoadHotpotqa, MissingFileIsAMissingArtifact) {
  EXPECT_THROW(load_hotpotqa("/nonexistent/hotpot.json"), MissingArtifactError);
}

TEST(AnswerInPremise, Cases) {
  EXPECT_TRUE(answer_in_premise("Summerlin", premise("S", "It is located in Summerlin, Nevada.")));
  EXPECT_TRUE(answer_in_premise("Lake School", premise("L", "Lake School")));
  EXPECT_FALSE(answer_in_premise("1957", premise("N", "No digits appear in this text.")));
  EXPECT_TRUE(answer_in_premise("the Russian Civil War", premise("R", "He fought in Russian civil war.")));
}

QuestionRecord record(const std::string& id, const std::string& answer, std::vector<std::string> support,
                      std::vector<Premise> premises, QuestionType t = QuestionType::kBridge) {
  QuestionRecord r;
  r.id = id;
  r.question = "q " + id;
  r.answer = answer;
  r.qtype = t;
  r.supporting_titles = std::move(support);
  r.premises = std::move(premises);
  return r;
}

TEST(FilterTwoHopBridge, RulesAndStats) {
  const Premise a = premise("A", "Alpha went to Beta School.");
  const Premise b = premise("B", "Beta School is in Gamma.");
  const Premise c = premise("C", "Gamma is a city.");
  const Premise d = premise("D", "Delta, Gamma.");
  std::vector<QuestionRecord> records = {
      record("keep", "Gamma", {"A", "B"}, {a, b, d}),
      record("three", "Gamma", {"A", "B", "C"}, {a, b, c}),
      record("both", "Gamma", {"B", "C"}, {a, b, c}),
      record("neither", "Omega", {"A", "B"}, {a, b}),
      record("missing", "Gamma", {"A", "Z"}, {a, b}),
      record("comparison", "Gamma", {"A", "B"}, {a, b}, QuestionType::kComparison),
  };
  FilterStats st;
  const auto kept = filter_two_hop_bridge(records, &st);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, "keep");
  EXPECT_EQ(kept[0].p1_hat.title, "A");
  EXPECT_EQ(kept[0].p2_hat.title, "B");
  ASSERT_EQ(kept[0].distractors.size(), 1u);
  EXPECT_EQ(kept[0].distractors[0].title, "D");
  EXPECT_EQ(st.kept, 1u);
  EXPECT_EQ(st.dropped_support_count, 1u);
  EXPECT_EQ(st.dropped_answer_location, 2u);
  EXPECT_EQ(st.dropped_missing_title, 1u);
  EXPECT_EQ(st.dropped_comparison, 1u);
  EXPECT_EQ(st.dropped(), 5u);
}

TEST(FilterTwoHopBridge, AnswerBearingPremiseMayComeFirst) {
  const Premise a = premise("A", "Alpha went to Beta School.");
  const Premise b = premise("B", "Beta School is in Gamma.");
  const auto kept = filter_two_hop_bridge({record("r", "Gamma", {"A", "B"}, {b, a})});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].p2_position, 0u);
  EXPECT_EQ(kept[0].p1_position, 1u);
  EXPECT_EQ(kept[0].premises()[0].title, "B");
}

// Properties over the synthetic corpus and a perturbed copy of it.
class FilterProperties : public ::testing::Test {
 protected:
  void SetUp() override {
    SyntheticOptions o;
    o.num_questions = 60;
    corpus_ = make_synthetic_corpus(o);
  }
  SyntheticCorpus corpus_;
};

TEST_F(FilterProperties, ExactlyOneGoldPremiseHoldsTheAnswer) {
  for (const auto& ex : filter_two_hop_bridge(corpus_.records)) {
    EXPECT_NE(answer_in_premise(ex.answer, ex.p1_hat), answer_in_premise(ex.answer, ex.p2_hat)) << ex.id;
    EXPECT_TRUE(answer_in_premise(ex.answer, ex.p2_hat)) << ex.id;
  }
}

TEST_F(FilterProperties, PremisesArePartitioned) {
  std::map<std::string, const QuestionRecord*> by_id;
  for (const auto& r : corpus_.records) by_id[r.id] = &r;
  for (const auto& ex : filter_two_hop_bridge(corpus_.records)) {
    const QuestionRecord& r = *by_id.at(ex.id);
    EXPECT_EQ(ex.premises(), r.premises) << ex.id;
    EXPECT_EQ(ex.distractors.size() + 2, r.premises.size());
    std::set<std::string> titles;
    for (const auto& p : ex.premises()) titles.insert(p.title);
    EXPECT_EQ(titles.size(), r.premises.size()) << "titles repeat in " << ex.id;
  }
}

TEST_F(FilterProperties, RefilteringKeptRecordsKeepsThemAll) {
  const auto kept = filter_two_hop_bridge(corpus_.records);
  std::set<std::string> ids;
  for (const auto& ex : kept) ids.insert(ex.id);
  std::vector<QuestionRecord> again;
  for (const auto& r : corpus_.records)
    if (ids.count(r.id)) again.push_back(r);
  const auto twice = filter_two_hop_bridge(again);
  ASSERT_EQ(twice.size(), kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) EXPECT_EQ(twice[i].id, kept[i].id);
}

TEST(BridgeExampleIo, JsonlRoundTrip) {
  SyntheticOptions o;
  o.num_questions = 5;
  const auto examples = filter_two_hop_bridge(make_synthetic_corpus(o).records);
  std::stringstream ss;
  write_bridge_examples(ss, examples);
  const auto back = read_bridge_examples(ss);
  ASSERT_EQ(back.size(), examples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, examples[i].id);
    EXPECT_EQ(back[i].premises(), examples[i].premises());
    EXPECT_EQ(back[i].p1_position, examples[i].p1_position);
    EXPECT_EQ(back[i].answer, examples[i].answer);
  }
}

TEST(BridgeExampleIo, BadLineIsAParseError) {
  std::stringstream ss("{\"id\": 3}\n");
  EXPECT_THROW(read_bridge_examples(ss), ParseError);
}

json squad_root(json qas, const std::string& context) {
  return json{{"version", "v2.0"},
              {"data", json::array({json{{"title", "T"},
                                         {"paragraphs", json::array({json{{"context", context}, {"qas", qas}}})}}})}};
}

TEST(ParseSquad, EmptyData) { EXPECT_TRUE(parse_squad(json{{"data", json::array()}}).empty()); }

TEST(ParseSquad, AnswerableAndImpossible) {
  const std::string ctx = "Fran Drescher was born in 1957.";
  json qas = json::array({
      json{{"id", "q1"}, {"question", "When?"}, {"is_impossible", false},
           {"answers", json::array({json{{"text", "1957"}, {"answer_start", 26}}})}},
      json{{"id", "q2"}, {"question", "Where?"}, {"is_impossible", true}, {"answers", json::array()}},
  });
  const auto ex = parse_squad(squad_root(qas, ctx));
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].answer_text, "1957");
  EXPECT_EQ(ex[0].answer_start, 26);
  EXPECT_FALSE(ex[0].is_impossible);
  EXPECT_TRUE(ex[1].is_impossible);
  EXPECT_EQ(ex[1].answer_text, "");
  EXPECT_EQ(ex[1].answer_start, -1);
}

TEST(ParseSquad, CodePointOffsetsBecomeByteOffsets) {
  const std::string ctx = "Zoë moved to Zürich.";
  json qas = json::array({json{{"id", "q"}, {"question", "Where?"}, {"is_impossible", false},
                               {"answers", json::array({json{{"text", "Zürich"}, {"answer_start", 13}}})}}});
  const auto ex = parse_squad(squad_root(qas, ctx));
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ctx.substr(static_cast<std::size_t>(ex[0].answer_start), ex[0].answer_text.size()), "Zürich");
}

TEST(ParseSquad, MismatchedAnswerStartIsAValidationError) {
  json qas = json::array({json{{"id", "q"}, {"question", "When?"}, {"is_impossible", false},
                               {"answers", json::array({json{{"text", "1957"}, {"answer_start", 3}}})}}});
  EXPECT_THROW(parse_squad(squad_root(qas, "Born in 1957.")), ValidationError);
}

TEST(LoadSquad, ReadsAFile) {
  TempDir dir("squad");
  json qas = json::array({json{{"id", "q"}, {"question", "When?"}, {"is_impossible", false},
                               {"answers", json::array({json{{"text", "1957"}, {"answer_start", 8}}})}}});
  std::ofstream(dir.file("s.json")) << squad_root(qas, "Born in 1957.").dump();
  EXPECT_EQ(load_squad(dir.file("s.json")).size(), 1u);
  std::ofstream(dir.file("bad.json")) << "{not json";
  EXPECT_THROW(load_squad(dir.file("bad.json")), ParseError);
}

}  // namespace
}  // namespace hopqa
