#pragma once

// The ternary premise controller: labels a (question, premise) pair Irrel,
// Intermediate or Final. Training triples come from the first-hop question and
// the gold premises of each bridge example.

#include "hopqa/corpus.hpp"
#include "hopqa/interfaces.hpp"
#include "hopqa/pair_encoder.hpp"
#include "hopqa/textproc.hpp"
#include "hopqa/training.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace hopqa {

// Which construction rule produced a triple.
enum class TripleRule {
  kIntermediate,   // (Q1, P1-hat)
  kFinal,          // (Q1, P2-hat) with extraction overlapping the answer
  kFinalRejected,  // (Q1, P2-hat) without overlap, labeled Irrel
  kOther,          // (Q1, distractor)
};

const char* rule_name(TripleRule r);
TripleRule rule_from_name(const std::string& name);

struct ControllerTriple {
  std::string example_id;
  std::string question;
  Premise premise;
  Label label = Label::kIrrel;
  TripleRule rule = TripleRule::kOther;
  double weight = 1.0;
};

// Non-empty intersection of the normalized token multisets.
bool answers_overlap(const std::string& extracted, const std::string& gold);

// One triple per premise of each example, in source-record order. Throws
// ValidationError if the extractor is not frozen.
std::vector<ControllerTriple> build_controller_dataset(const std::vector<BridgeExample>& examples,
                                                       const SingleHopReader& extractor);

struct ControllerConfig {
  std::string backend = BiLstmPairEncoder::kBackendId;
  int vocab_size = 20000;
  int embedding_dim = 32;
  int hidden_dim = 48;
  int align_dim = 32;
  int mlp_dim = 32;
  int max_question_len = 64;
  int max_premise_len = 256;  // premise tokens past this are not read
  bool class_weighting = true;
  double irrel_keep_fraction = 1.0;  // < 1 downsamples Irrel triples
  TrainOptions train;

  void validate() const;
};

class ControllerModel final : public PremiseClassifier {
 public:
  ControllerModel(ControllerConfig cfg, Vocab vocab);
  ControllerModel(ControllerModel&&) noexcept = default;
  ControllerModel& operator=(ControllerModel&&) noexcept = default;

  Verdict classify(const std::string& question, const Premise& premise) const override;
  std::array<double, 3> scores(const std::string& question, const Premise& premise) const;

  // Weighted cross-entropy of one pair, accumulated into parameter grads.
  double pair_loss(const std::string& question, const Premise& premise, Label label, double weight);

  const ControllerConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  nn::ParamSet& params() { return *params_; }

  void save(const std::string& dir, const std::string& config_hash) const;
  static ControllerModel load(const std::string& dir);

 private:
  ag::Var logits(ag::Graph& g, const std::string& question, const Premise& premise) const;

  ControllerConfig cfg_;
  Vocab vocab_;
  std::unique_ptr<nn::ParamSet> params_;
  std::unique_ptr<PairEncoder> encoder_;
  ag::Parameter* hidden_w_ = nullptr;
  ag::Parameter* hidden_b_ = nullptr;
  ag::Parameter* out_w_ = nullptr;
  ag::Parameter* out_b_ = nullptr;
};

// Identical (question, premise, label) triples are merged into one weighted
// item in first-occurrence order before training. Throws ValidationError when
// a label class is absent, naming the class histogram.
ControllerModel train_controller(const std::vector<ControllerTriple>& triples, const ControllerConfig& cfg,
                                 TrainReport* report = nullptr);

// Line-delimited {"example_id", "question", "title", "premise", "label", "rule", "weight"}.
void write_triples(std::ostream& out, const std::vector<ControllerTriple>& triples);
std::vector<ControllerTriple> read_triples(std::istream& in);
std::vector<ControllerTriple> read_triples(const std::string& path);

}  // namespace hopqa
