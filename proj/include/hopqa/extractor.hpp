#pragma once

#include "hopqa/corpus.hpp"
#include "hopqa/interfaces.hpp"
#include "hopqa/pair_encoder.hpp"
#include "hopqa/textproc.hpp"
#include "hopqa/training.hpp"

#include <memory>
#include <string>
#include <vector>

namespace hopqa {

struct ExtractorConfig {
  std::string backend = BiLstmPairEncoder::kBackendId;
  int vocab_size = 20000;
  int embedding_dim = 32;
  int hidden_dim = 48;
  int align_dim = 32;
  int max_question_len = 64;
  int window_len = 384;
  int window_stride = 128;
  int max_answer_len = 30;
  double null_threshold = 0.0;  // tau: a prediction is null iff confidence <= tau
  TrainOptions train;

  void validate() const;
};

// Confidence reported when a premise has no tokens to choose from.
inline constexpr double kNoSpanConfidence = -1e30;

// Raw head scores over one window of premise tokens.
struct SpanScores {
  std::vector<double> start;
  std::vector<double> end;
  double null_start = 0.0;
  double null_end = 0.0;
};

struct BestSpan {
  std::size_t first = 0;  // token indices, inclusive
  std::size_t last = 0;
  double confidence = kNoSpanConfidence;  // best start + end score minus the null score
};

// Highest-scoring span with last - first < max_len.
BestSpan best_span(const SpanScores& scores, int max_len);

// The single-hop answer extractor. A freshly trained model is frozen; frozen
// parameters can no longer be updated through this API.
class ExtractorModel final : public SingleHopReader {
 public:
  ExtractorModel(ExtractorConfig cfg, Vocab vocab);
  ExtractorModel(ExtractorModel&&) noexcept = default;
  ExtractorModel& operator=(ExtractorModel&&) noexcept = default;

  SpanPrediction extract(const std::string& question, const Premise& premise) const override;
  bool frozen() const override { return frozen_; }
  void freeze() { frozen_ = true; }

  SpanScores score_window(const std::vector<std::string>& question_tokens,
                          const std::vector<std::string>& window_tokens) const;

  const ExtractorConfig& config() const { return cfg_; }
  void set_null_threshold(double tau) { cfg_.null_threshold = tau; }
  const Vocab& vocab() const { return vocab_; }
  nn::ParamSet& params() { return *params_; }

  void save(const std::string& dir, const std::string& config_hash) const;
  static ExtractorModel load(const std::string& dir);

  // Loss of one window: negative log-likelihood of the gold start and end
  // (index -1 means the null answer). Adds to parameter grads.
  double window_loss(const std::vector<std::string>& question_tokens, const std::vector<std::string>& window_tokens,
                     int gold_first, int gold_last);

 private:
  ag::Var head_logits(ag::Graph& g, const PairEncoding& enc, bool start) const;
  PairInput make_input(const std::vector<std::string>& question_tokens,
                       const std::vector<std::string>& window_tokens) const;

  ExtractorConfig cfg_;
  Vocab vocab_;
  std::unique_ptr<nn::ParamSet> params_;
  std::unique_ptr<PairEncoder> encoder_;
  ag::Parameter* start_w_ = nullptr;
  ag::Parameter* end_w_ = nullptr;
  ag::Parameter* null_w_ = nullptr;
  ag::Parameter* null_b_ = nullptr;
  bool frozen_ = false;
};

// Window start offsets (token indices) covering n tokens.
std::vector<std::size_t> window_starts(std::size_t n, int window_len, int stride);

ExtractorModel train_extractor(const std::vector<SquadExample>& examples, const ExtractorConfig& cfg,
                               TrainReport* report = nullptr);

// Further training of an existing model; refuses frozen models.
void continue_training(ExtractorModel& model, const std::vector<SquadExample>& examples, const TrainOptions& opts);

struct ExtractorEval {
  double em = 0.0;  // percentages
  double f1 = 0.0;
  std::size_t count = 0;
};
ExtractorEval evaluate_extractor(const ExtractorModel& model, const std::vector<SquadExample>& examples);

}  // namespace hopqa
