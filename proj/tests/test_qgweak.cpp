#include "hopqa/error.hpp"
#include "hopqa/qgweak.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace hopqa {
namespace {

using testing::premise;
using testing::TempDir;

TEST(LocateAnswer, ExactThenCaseInsensitiveThenNormalizedWindow) {
  const std::string ctx = "Bishop Gorman High School is located in Summerlin, Nevada.";
  auto span = locate_answer(ctx, "Summerlin, Nevada");
  ASSERT_TRUE(span);
  EXPECT_EQ(ctx.substr(span->first, span->second - span->first), "Summerlin, Nevada");

  span = locate_answer(ctx, "summerlin");
  ASSERT_TRUE(span);
  EXPECT_EQ(ctx.substr(span->first, span->second - span->first), "Summerlin");

  span = locate_answer(ctx, "Summerlin Nevada");
  ASSERT_TRUE(span);
  EXPECT_EQ(ctx.substr(span->first, span->second - span->first), "Summerlin, Nevada");

  EXPECT_FALSE(locate_answer(ctx, "Reno"));
  EXPECT_FALSE(locate_answer(ctx, ""));
}

TEST(LocateAnswer, FirstOccurrenceWins) {
  const std::string ctx = "Reno is near Reno Lake.";
  const auto span = locate_answer(ctx, "Reno");
  ASSERT_TRUE(span);
  EXPECT_EQ(span->first, 0u);
}

SquadExample squad(const std::string& id, const std::string& q, const std::string& ctx, const std::string& a) {
  SquadExample ex;
  ex.id = id;
  ex.question = q;
  ex.context = ctx;
  ex.answer_text = a;
  ex.answer_start = static_cast<std::ptrdiff_t>(ctx.find(a));
  return ex;
}

const std::vector<std::pair<std::string, std::string>> kBirthplaces = {
    {"Kim Tate", "Dover"}, {"Lou Reyes", "Tulsa"}, {"Max Hart", "Akron"},
    {"Ned Cole", "Salem"}, {"Oda Finch", "Boise"}, {"Pia Lowe", "Macon"}};

// "X was born in Y." paired with "where was X born?".
std::vector<SquadExample> birthplace_set() {
  std::vector<SquadExample> out;
  for (const auto& [who, where] : kBirthplaces) {
    out.push_back(squad(who, "where was " + who + " born?", who + " was born in " + where + ".", where));
  }
  return out;
}

QGConfig tiny_qg() {
  QGConfig cfg;
  cfg.embedding_dim = 24;
  cfg.hidden_dim = 32;
  cfg.attention_dim = 24;
  cfg.feature_dim = 4;
  cfg.train.epochs = 300;
  cfg.train.batch_size = 2;
  cfg.train.learning_rate = 0.01;
  cfg.train.dev_fraction = 0.0;
  return cfg;
}

const QGModel& trained_qg() {
  static const QGModel model = train_qg(birthplace_set(), tiny_qg());
  return model;
}

TEST(TrainQg, ConfigAndInputErrors) {
  QGConfig cfg = tiny_qg();
  cfg.beam_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(train_qg(birthplace_set(), cfg), ConfigError);
  EXPECT_THROW(train_qg({}, tiny_qg()), ValidationError);
  SquadExample impossible = squad("i", "where?", "Nothing.", "");
  impossible.is_impossible = true;
  impossible.answer_start = -1;
  EXPECT_THROW(train_qg({impossible}, tiny_qg()), ValidationError);
}

TEST(TrainQg, SkipsAnswersMissingFromTheirContext) {
  auto set = birthplace_set();
  SquadExample stray = squad("stray", "where was Zed born?", "Zed was born somewhere.", "Paris");
  set.push_back(stray);
  QGConfig cfg = tiny_qg();
  cfg.train.epochs = 1;
  TrainReport rep;
  train_qg(set, cfg, &rep);
  EXPECT_DOUBLE_EQ(rep.metrics.at("skipped"), 1.0);
  EXPECT_DOUBLE_EQ(rep.metrics.at("train_examples"), static_cast<double>(birthplace_set().size()));
}

TEST(TrainQg, ReportsDevPerplexityWhenADevSliceExists) {
  QGConfig cfg = tiny_qg();
  cfg.train.epochs = 1;
  cfg.train.dev_fraction = 0.3;
  TrainReport rep;
  train_qg(birthplace_set(), cfg, &rep);
  ASSERT_TRUE(rep.metrics.count("dev_perplexity"));
  EXPECT_GT(rep.metrics.at("dev_perplexity"), 1.0);
}

TEST(GenerateQuestion, ReproducesTheTemplateOnHeldInEntities) {
  int correct = 0;
  for (const auto& ex : birthplace_set()) {
    const WeakFollowup w = generate_question(trained_qg(), ex.context, ex.answer_text);
    if (w.text() == detokenize(tokenize(ex.question))) ++correct;
  }
  EXPECT_GE(correct, static_cast<int>(kBirthplaces.size()) - 1);
}

TEST(GenerateQuestion, ShapeContractAndDeterminism) {
  const WeakFollowup whole = generate_question(trained_qg(), "Dover", "Dover");
  ASSERT_FALSE(whole.question_tokens.empty());
  EXPECT_EQ(whole.question_tokens.back(), "?");
  const WeakFollowup a = generate_question(trained_qg(), "Kim Tate was born in Dover.", "Dover");
  const WeakFollowup b = generate_question(trained_qg(), "Kim Tate was born in Dover.", "Dover");
  EXPECT_EQ(a.question_tokens, b.question_tokens);
  EXPECT_DOUBLE_EQ(a.beam_score, b.beam_score);
  EXPECT_THROW(generate_question(trained_qg(), "Kim Tate was born in Dover.", "Reno"), ValidationError);
}

TEST(QgInput, MarksTheAnswerSpanAndWindowsLongContexts) {
  const QGModel& m = trained_qg();
  const std::string ctx = "Kim Tate was born in Dover.";
  const auto span = locate_answer(ctx, "Dover");
  const Seq2SeqInput in = m.make_input(ctx, span->first, span->second);
  ASSERT_EQ(in.features.size(), in.source.tokens.size());
  for (std::size_t i = 0; i < in.features.size(); ++i) {
    EXPECT_EQ(in.features[i], in.source.tokens[i] == "dover" ? 1 : 0);
  }

  std::string long_ctx;
  for (int i = 0; i < 300; ++i) long_ctx += "filler words here. ";
  long_ctx += "Kim Tate was born in Dover.";
  const auto far = locate_answer(long_ctx, "Dover");
  const Seq2SeqInput cut = m.make_input(long_ctx, far->first, far->second);
  EXPECT_LE(static_cast<int>(cut.source.tokens.size()), m.config().max_source_len);
  EXPECT_NE(std::find(cut.features.begin(), cut.features.end(), 1), cut.features.end());
}

BridgeExample bridge(const std::string& id, const std::string& who, const std::string& where) {
  BridgeExample ex;
  ex.id = id;
  ex.q1 = "where was the founder of " + id + " born?";
  ex.answer = where;
  ex.p1_hat = premise(id, id + " was founded by " + who + ".");
  ex.p2_hat = premise(who, who + " was born in " + where + ".");
  return ex;
}

TEST(WeakLabelFollowups, AlignedWithExamples) {
  EXPECT_TRUE(weak_label_followups(trained_qg(), {}).empty());
  const std::vector<BridgeExample> examples = {bridge("Acme", "Kim Tate", "Dover"), bridge("Bolt", "Lou Reyes", "Tulsa"),
                                               bridge("Cask", "Max Hart", "Akron")};
  const auto labels = weak_label_followups(trained_qg(), examples);
  ASSERT_EQ(labels.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(labels[i].example_id, examples[i].id);
    EXPECT_EQ(labels[i].context_id, examples[i].p2_hat.title);
    EXPECT_EQ(labels[i].question_tokens.back(), "?");
  }
  EXPECT_EQ(labels[0].text(), "where was kim tate born?");
}

TEST(WeakLabelFollowups, JsonlRoundTrip) {
  const auto labels = weak_label_followups(trained_qg(), {bridge("Acme", "Kim Tate", "Dover")});
  std::stringstream ss;
  write_weak_labels(ss, labels);
  const auto back = read_weak_labels(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].example_id, labels[0].example_id);
  EXPECT_EQ(back[0].question_tokens, labels[0].question_tokens);
  EXPECT_DOUBLE_EQ(back[0].beam_score, labels[0].beam_score);
  EXPECT_EQ(back[0].context_id, labels[0].context_id);
  EXPECT_THROW(read_weak_labels("/nonexistent/labels.jsonl"), MissingArtifactError);
}

TEST(QgCheckpoint, SaveLoadReproducesGeneration) {
  TempDir dir("qg");
  trained_qg().save(dir.str(), "feed");
  const QGModel back = QGModel::load(dir.str());
  for (const auto& ex : birthplace_set()) {
    EXPECT_EQ(generate_question(back, ex.context, ex.answer_text).question_tokens,
              generate_question(trained_qg(), ex.context, ex.answer_text).question_tokens);
  }
}

}  // namespace
}  // namespace hopqa
