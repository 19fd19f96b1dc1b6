#pragma once

// Answer-aware neural question generation, trained on SQuAD read in reverse
// (context + answer -> question), and its use as a weak labeler of followup
// questions: applied to the answer-bearing premise and the gold answer of
// each bridge example.

#include "hopqa/corpus.hpp"
#include "hopqa/pointer_generator.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hopqa {

struct QGConfig {
  int vocab_size = 20000;
  int embedding_dim = 32;
  int hidden_dim = 48;
  int attention_dim = 48;
  int feature_dim = 8;
  bool coverage = false;
  int max_source_len = 384;
  int max_target_len = 32;
  int beam_size = 4;
  TrainOptions train;

  void validate() const;
};

struct WeakFollowup {
  std::string example_id;
  std::vector<std::string> question_tokens;  // ends with "?"
  double beam_score = 0.0;
  std::string context_id;  // title of the premise the question was generated from

  std::string text() const { return detokenize(question_tokens); }
};

// Byte span of the first occurrence of answer in context: exact match first,
// then case-insensitive, then the shortest token window whose normalized text
// contains the normalized answer.
std::optional<std::pair<std::size_t, std::size_t>> locate_answer(const std::string& context,
                                                                 const std::string& answer);

class QGModel {
 public:
  QGModel(QGConfig cfg, Vocab vocab, PointerGenerator net)
      : cfg_(std::move(cfg)), vocab_(std::move(vocab)), net_(std::move(net)) {}

  // Context tokens tagged 1 inside the answer span, 0 elsewhere; long contexts
  // are cut to a window of max_source_len tokens that contains the answer.
  Seq2SeqInput make_input(const std::string& context, std::size_t answer_begin, std::size_t answer_end) const;
  std::vector<int> make_target(const std::string& question, const EncodedSource& source) const;

  const QGConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  const PointerGenerator& net() const { return net_; }
  PointerGenerator& net() { return net_; }

  void save(const std::string& dir, const std::string& config_hash) const;
  static QGModel load(const std::string& dir);

 private:
  QGConfig cfg_;
  Vocab vocab_;
  PointerGenerator net_;
};

QGModel train_qg(const std::vector<SquadExample>& examples, const QGConfig& cfg, TrainReport* report = nullptr);

// Throws ValidationError when the answer cannot be located in the context.
WeakFollowup generate_question(const QGModel& model, const std::string& context, const std::string& answer);

std::vector<WeakFollowup> weak_label_followups(const QGModel& model, const std::vector<BridgeExample>& examples);

// Line-delimited {"example_id", "question", "beam_score", "context_id"}.
void write_weak_labels(std::ostream& out, const std::vector<WeakFollowup>& labels);
std::vector<WeakFollowup> read_weak_labels(std::istream& in);
std::vector<WeakFollowup> read_weak_labels(const std::string& path);

}  // namespace hopqa
