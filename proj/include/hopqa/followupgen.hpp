#pragma once

// The followup generator: a pointer-generator reading [Q1 ; <sep> ; P1] and
// writing a self-contained single-hop question Q2. Trained with token-level
// loss against the weak labels produced by the question generator.

#include "hopqa/corpus.hpp"
#include "hopqa/interfaces.hpp"
#include "hopqa/pointer_generator.hpp"
#include "hopqa/qgweak.hpp"

#include <string>
#include <vector>

namespace hopqa {

struct FollowupConfig {
  int vocab_size = 20000;
  int embedding_dim = 32;
  int hidden_dim = 48;
  int attention_dim = 48;
  int feature_dim = 8;
  bool coverage = false;
  double coverage_weight = 1.0;
  int max_source_len = 400;
  int max_target_len = 32;
  int beam_size = 4;
  TrainOptions train;

  void validate() const;
};

// Source feature tags.
inline constexpr int kQuestionTag = 0;
inline constexpr int kSeparatorTag = 1;
inline constexpr int kPremiseTag = 2;

// tokenize(q1) + <sep> + tokenize(p1.paragraph_text). Only premise tokens are
// dropped when the sequence exceeds max_source_len.
Seq2SeqInput build_source(const std::string& q1, const Premise& p1, const Vocab& vocab, int max_source_len);

class FollowupModel final : public FollowupWriter {
 public:
  FollowupModel(FollowupConfig cfg, Vocab vocab, PointerGenerator net)
      : cfg_(std::move(cfg)), vocab_(std::move(vocab)), net_(std::move(net)) {}

  std::string generate(const std::string& q1, const Premise& p1) const override;
  std::vector<std::string> generate_tokens(const std::string& q1, const Premise& p1) const;

  Seq2SeqInput make_input(const std::string& q1, const Premise& p1) const {
    return build_source(q1, p1, vocab_, cfg_.max_source_len);
  }
  // Extended ids of the weak label followed by EOS. Tokens outside the
  // vocabulary and the source map to <unk>.
  std::vector<int> make_target(const std::vector<std::string>& q2_tokens, const EncodedSource& source) const;

  const FollowupConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  const PointerGenerator& net() const { return net_; }
  PointerGenerator& net() { return net_; }

  void save(const std::string& dir, const std::string& config_hash) const;
  static FollowupModel load(const std::string& dir);

 private:
  FollowupConfig cfg_;
  Vocab vocab_;
  PointerGenerator net_;
};

// labels[i] must carry examples[i].id. Throws ValidationError on misalignment
// or empty input, before any training happens.
FollowupModel train_followup(const std::vector<BridgeExample>& examples, const std::vector<WeakFollowup>& labels,
                             const FollowupConfig& cfg, TrainReport* report = nullptr);

inline std::string generate_followup(const FollowupModel& model, const std::string& q1, const Premise& p1) {
  return model.generate(q1, p1);
}

// Teacher-forced argmax accuracy of the model on the given pairs.
double followup_token_accuracy(const FollowupModel& model, const std::vector<BridgeExample>& examples,
                               const std::vector<WeakFollowup>& labels);

}  // namespace hopqa
