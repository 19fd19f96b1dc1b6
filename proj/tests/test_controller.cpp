#include "hopqa/controller.hpp"
#include "hopqa/error.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace hopqa {
namespace {

using testing::premise;
using testing::ScriptedReader;
using testing::TempDir;

TEST(Verdict, ArgmaxWithFixedTieOrder) {
  EXPECT_EQ(verdict_from_probs({0.1, 0.2, 0.7}).label, Label::kFinal);
  EXPECT_EQ(verdict_from_probs({0.4, 0.4, 0.2}).label, Label::kIrrel);
  EXPECT_EQ(verdict_from_probs({0.2, 0.4, 0.4}).label, Label::kIntermediate);
  const Verdict v = verdict_from_scores({1.0, 2.0, 3.0});
  EXPECT_EQ(v.label, Label::kFinal);
  EXPECT_NEAR(v.probs[0] + v.probs[1] + v.probs[2], 1.0, 1e-12);
  for (double p : v.probs) EXPECT_GE(p, 0.0);
}

TEST(Verdict, LabelInvariantUnderMonotoneRescaling) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    std::array<double, 3> s{u(rng), u(rng), u(rng)};
    if (i % 7 == 0) s[1] = s[0];  // exercise ties
    const Label base = verdict_from_scores(s).label;
    std::array<double, 3> affine{}, cubic{};
    for (int k = 0; k < 3; ++k) {
      affine[k] = 2.5 * s[k] - 7.0;
      cubic[k] = s[k] * s[k] * s[k];
    }
    EXPECT_EQ(verdict_from_scores(affine).label, base);
    EXPECT_EQ(verdict_from_scores(cubic).label, base);
  }
}

TEST(LabelNames, RoundTrip) {
  for (auto l : {Label::kIrrel, Label::kIntermediate, Label::kFinal}) EXPECT_EQ(label_from_name(label_name(l)), l);
  for (auto r : {TripleRule::kIntermediate, TripleRule::kFinal, TripleRule::kFinalRejected, TripleRule::kOther}) {
    EXPECT_EQ(rule_from_name(rule_name(r)), r);
  }
}

TEST(AnswersOverlap, NormalizedTokenIntersection) {
  EXPECT_TRUE(answers_overlap("Summerlin, Nevada", "Summerlin"));
  EXPECT_TRUE(answers_overlap("the Sean Yseult", "Sean Yseult."));
  EXPECT_FALSE(answers_overlap("Chris Lee", "Sean Yseult."));
  EXPECT_FALSE(answers_overlap("the", "The"));  // articles vanish under normalization
  EXPECT_FALSE(answers_overlap("", "x"));
}

BridgeExample example(const std::string& id, int num_distractors = 8) {
  BridgeExample ex;
  ex.id = id;
  ex.q1 = "question " + id + "?";
  ex.answer = "answer " + id;
  ex.p1_hat = premise("P1 " + id, "bridge fact " + id);
  ex.p2_hat = premise("P2 " + id, "answer fact " + id);
  for (int i = 0; i < num_distractors; ++i) ex.distractors.push_back(premise("D" + std::to_string(i) + " " + id, "x"));
  ex.p1_position = 2;
  ex.p2_position = 5;
  return ex;
}

TEST(BuildControllerDataset, RulesPerExample) {
  const BridgeExample hit = example("hit"), miss = example("miss"), partial = example("partial");
  ScriptedReader reader;
  reader.set(hit.q1, hit.p2_hat.title, hit.answer, 2.0);
  reader.set(partial.q1, partial.p2_hat.title, "answer elsewhere", 1.0);  // overlaps on "answer"
  // miss: no entry, so the scripted extraction is null
  const auto triples = build_controller_dataset({hit, miss, partial}, reader);
  ASSERT_EQ(triples.size(), 30u);
  for (std::size_t e = 0; e < 3; ++e) {
    const bool final_expected = e != 1;
    for (std::size_t i = 0; i < 10; ++i) {
      const auto& t = triples[e * 10 + i];
      if (i == 2) {
        EXPECT_EQ(t.label, Label::kIntermediate);
        EXPECT_EQ(t.rule, TripleRule::kIntermediate);
      } else if (i == 5) {
        EXPECT_EQ(t.label, final_expected ? Label::kFinal : Label::kIrrel);
        EXPECT_EQ(t.rule, final_expected ? TripleRule::kFinal : TripleRule::kFinalRejected);
      } else {
        EXPECT_EQ(t.label, Label::kIrrel);
        EXPECT_EQ(t.rule, TripleRule::kOther);
      }
      EXPECT_EQ(t.question, triples[e * 10].question);
    }
  }
  EXPECT_EQ(reader.calls, 3);
}

TEST(BuildControllerDataset, EmptyInputAndUnfrozenExtractor) {
  ScriptedReader reader;
  EXPECT_TRUE(build_controller_dataset({}, reader).empty());
  reader.frozen_flag = false;
  EXPECT_THROW(build_controller_dataset({example("a")}, reader), ValidationError);
}

TEST(BuildControllerDataset, OneTriplePerPremiseAndIdenticalExtractionsAgree) {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    BridgeExample a = example("a", static_cast<int>(rng() % 9)), b = example("b", static_cast<int>(rng() % 9));
    b.answer = a.answer;
    a.p1_position = 0;
    a.p2_position = a.distractors.size() + 1;
    b.p1_position = 1;
    b.p2_position = 0;
    ScriptedReader reader;
    const std::string extracted = rng() % 2 ? a.answer : "unrelated words";
    reader.set(a.q1, a.p2_hat.title, extracted, 1.0);
    reader.set(b.q1, b.p2_hat.title, extracted, 1.0);
    const auto triples = build_controller_dataset({a, b}, reader);
    ASSERT_EQ(triples.size(), a.distractors.size() + b.distractors.size() + 4);
    auto p2_label = [&](const BridgeExample& ex) {
      for (const auto& t : triples)
        if (t.example_id == ex.id && t.premise.title == ex.p2_hat.title) return t.label;
      return Label::kIntermediate;
    };
    EXPECT_EQ(p2_label(a), p2_label(b));
    int intermediate = 0;
    for (const auto& t : triples) intermediate += t.label == Label::kIntermediate;
    EXPECT_EQ(intermediate, 2);
  }
}

// Labels keyed by a single premise word; the other words are noise.
std::vector<ControllerTriple> keyword_triples(int n, std::uint64_t seed) {
  const std::vector<std::string> keys = {"alpha", "beta", "gamma"};
  const std::vector<std::string> noise = {"red", "blue", "green", "tall", "small", "old", "new", "far", "near", "cold"};
  std::mt19937 rng(static_cast<unsigned>(seed));
  std::vector<ControllerTriple> out;
  for (int i = 0; i < n; ++i) {
    const int c = i % 3;
    std::string text;
    for (int k = 0; k < 4; ++k) text += noise[rng() % noise.size()] + " ";
    text += keys[c];
    for (int k = 0; k < 2; ++k) text += " " + noise[rng() % noise.size()];
    ControllerTriple t;
    t.example_id = "k" + std::to_string(i);
    t.question = "which one is it?";
    t.premise = premise("T" + std::to_string(i), text);
    t.label = static_cast<Label>(c);
    out.push_back(t);
  }
  return out;
}

ControllerConfig tiny_controller() {
  ControllerConfig cfg;
  cfg.embedding_dim = 12;
  cfg.hidden_dim = 12;
  cfg.align_dim = 8;
  cfg.mlp_dim = 12;
  cfg.train.epochs = 30;
  cfg.train.batch_size = 4;
  cfg.train.learning_rate = 0.01;
  cfg.train.dev_fraction = 0.0;
  return cfg;
}

TEST(TrainController, EmptyAndMissingClass) {
  EXPECT_THROW(train_controller({}, tiny_controller()), ValidationError);
  auto triples = keyword_triples(9, 1);
  triples.erase(std::remove_if(triples.begin(), triples.end(),
                               [](const ControllerTriple& t) { return t.label == Label::kFinal; }),
                triples.end());
  try {
    train_controller(triples, tiny_controller());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("Irrel=3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("Final=0"), std::string::npos) << msg;
  }
}

TEST(TrainController, SeparableKeywordTriplesGeneralizeToDev) {
  ControllerConfig cfg = tiny_controller();
  cfg.train.dev_fraction = 0.25;
  TrainReport rep;
  const ControllerModel m = train_controller(keyword_triples(120, 2), cfg, &rep);
  ASSERT_TRUE(rep.metrics.count("dev_acc"));
  EXPECT_GE(rep.metrics.at("dev_acc"), 0.95);
  for (const char* c : {"dev_acc_Irrel", "dev_acc_Intermediate", "dev_acc_Final"}) EXPECT_TRUE(rep.metrics.count(c)) << c;

  const ControllerTriple t = keyword_triples(3, 99)[2];
  const Verdict a = m.classify(t.question, t.premise), b = m.classify(t.question, t.premise);
  EXPECT_EQ(a.label, b.label);
  EXPECT_EQ(a.probs, b.probs);
  EXPECT_NEAR(a.probs[0] + a.probs[1] + a.probs[2], 1.0, 1e-9);
}

TEST(TrainController, DuplicatesEqualProportionalWeights) {
  const auto base = keyword_triples(12, 3);
  std::vector<ControllerTriple> duplicated, weighted;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const int copies = 1 + static_cast<int>(i % 3);
    ControllerTriple w = base[i];
    w.weight = copies;
    weighted.push_back(w);
  }
  // Copies are appended after all first occurrences, so merging keeps the
  // first-occurrence order of the weighted list.
  duplicated = base;
  for (std::size_t i = 0; i < base.size(); ++i)
    for (int c = 1; c < 1 + static_cast<int>(i % 3); ++c) duplicated.push_back(base[i]);

  ControllerConfig cfg = tiny_controller();
  cfg.train.epochs = 3;
  TrainReport ra, rb;
  ControllerModel a = train_controller(duplicated, cfg, &ra);
  ControllerModel b = train_controller(weighted, cfg, &rb);
  EXPECT_EQ(ra.loss_curve, rb.loss_curve);
  EXPECT_EQ(ra.metrics, rb.metrics);
  for (std::size_t k = 0; k < a.params().all().size(); ++k) {
    EXPECT_TRUE(a.params().all()[k]->value == b.params().all()[k]->value) << a.params().all()[k]->name;
  }
}

TEST(TrainController, IrrelDownsamplingStillNeedsAllClasses) {
  ControllerConfig cfg = tiny_controller();
  cfg.train.epochs = 1;
  cfg.irrel_keep_fraction = 0.5;
  TrainReport rep;
  train_controller(keyword_triples(60, 5), cfg, &rep);
  EXPECT_LT(rep.metrics.at("items"), 60.0);
  cfg.irrel_keep_fraction = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ControllerPairLoss, GradientsMatchFiniteDifferences) {
  ControllerConfig cfg = tiny_controller();
  cfg.embedding_dim = 4;
  cfg.hidden_dim = 3;
  cfg.align_dim = 3;
  cfg.mlp_dim = 4;
  ControllerModel m(cfg, build_vocab({{"which", "one", "?", "alpha", "beta"}}, 20));
  const Premise p = premise("t", "beta alpha one");
  for (Label l : {Label::kIrrel, Label::kFinal}) {
    testing::expect_gradients_match(m.params(), [&] { return m.pair_loss("which one ?", p, l, 1.7); });
  }
}

TEST(ControllerCheckpoint, SaveLoadAndTripleIo) {
  const auto triples = keyword_triples(9, 6);
  ControllerConfig cfg = tiny_controller();
  cfg.train.epochs = 2;
  const ControllerModel m = train_controller(triples, cfg);
  TempDir dir("controller");
  m.save(dir.str(), "abcd");
  const ControllerModel back = ControllerModel::load(dir.str());
  for (const auto& t : triples) EXPECT_EQ(back.scores(t.question, t.premise), m.scores(t.question, t.premise));

  std::stringstream ss;
  write_triples(ss, triples);
  const auto read = read_triples(ss);
  ASSERT_EQ(read.size(), triples.size());
  for (std::size_t i = 0; i < read.size(); ++i) {
    EXPECT_EQ(read[i].premise, triples[i].premise);
    EXPECT_EQ(read[i].label, triples[i].label);
    EXPECT_EQ(read[i].rule, triples[i].rule);
    EXPECT_EQ(read[i].example_id, triples[i].example_id);
  }
  EXPECT_THROW(read_triples(dir.file("none.jsonl")), MissingArtifactError);
}

}  // namespace
}  // namespace hopqa
