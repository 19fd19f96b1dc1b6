#pragma once

// Attentional encoder-decoder whose output distribution mixes generation from
// a fixed vocabulary with copying source tokens:
//
//   mixture(w) = p_gen * vocab_dist(w) + (1 - p_gen) * sum_{i : src_i = w} attention(i)
//
// Source tokens outside the vocabulary receive temporary ids (see
// EncodedSource), so copied OOV words can be produced. Used both by the
// question generator and by the followup generator.

#include "hopqa/checkpoint.hpp"
#include "hopqa/nn.hpp"
#include "hopqa/textproc.hpp"
#include "hopqa/training.hpp"

#include <random>
#include <string>
#include <vector>

namespace hopqa {

struct Seq2SeqConfig {
  int vocab_size = 0;
  int embedding_dim = 32;
  int hidden_dim = 48;
  int attention_dim = 48;
  int num_features = 2;  // distinct per-source-token tag values
  int feature_dim = 8;
  bool coverage = false;
  double coverage_weight = 1.0;

  void validate() const;
};

struct Seq2SeqInput {
  EncodedSource source;
  std::vector<int> features;  // one tag per source token, in [0, num_features)
};

struct EncoderOutput {
  ag::Matrix annotations;  // 2H x T
  ag::Matrix attention_keys;  // A x T
  ag::Vector init_h;
  ag::Vector init_c;
};

struct DecoderState {
  ag::Vector h;
  ag::Vector c;
  ag::Vector context;   // previous attention context (input feeding)
  ag::Vector coverage;  // running sum of attention, zeros when disabled
  int prev_token = Vocab::kBos;  // extended id of the previous output token
};

struct DecodeStepOutput {
  ag::Vector vocab_dist;  // over the fixed vocabulary
  ag::Vector attention;   // over source positions
  double p_gen = 1.0;
  ag::Vector mixture;     // over vocab + source OOVs
};

// mixture = p_gen * vocab_dist (zero-padded) + (1 - p_gen) * attention
// scattered onto the extended ids of the source positions.
ag::Vector mix_distributions(const ag::Vector& vocab_dist, const ag::Vector& attention, double p_gen,
                             const std::vector<int>& extended_ids, int extended_size);

struct Hypothesis {
  std::vector<int> tokens;  // extended ids, EOS excluded
  double log_prob = 0.0;
  double score = 0.0;       // log_prob / number of emitted tokens (EOS included)
  bool finished = false;
};

class PointerGenerator {
 public:
  PointerGenerator(const Seq2SeqConfig& cfg, std::uint64_t seed);
  PointerGenerator(PointerGenerator&&) noexcept = default;
  PointerGenerator& operator=(PointerGenerator&&) noexcept = default;

  const Seq2SeqConfig& config() const { return cfg_; }
  nn::ParamSet& params() { return *params_; }
  const nn::ParamSet& params() const { return *params_; }

  // Teacher-forced mean token negative log-likelihood of target (extended ids,
  // EOS appended by the caller) built on g; coverage loss is added when enabled.
  ag::Var sequence_loss(ag::Graph& g, const Seq2SeqInput& input, const std::vector<int>& target) const;

  // Per-token probabilities of target under teacher forcing (no grads).
  std::vector<double> target_probabilities(const Seq2SeqInput& input, const std::vector<int>& target) const;

  EncoderOutput encode(const Seq2SeqInput& input) const;
  DecoderState initial_state(const EncoderOutput& enc) const;
  // Consumes state.prev_token, advances the state and returns the step's
  // distributions. The caller sets state.prev_token to the chosen token.
  DecodeStepOutput decode_step(const EncoderOutput& enc, const Seq2SeqInput& input, DecoderState& state) const;

  // Length-normalized beam search. Reserved tokens other than EOS are never
  // emitted. Returns the best finished hypothesis, or the best unfinished one
  // when none finished within max_len steps.
  Hypothesis beam_search(const Seq2SeqInput& input, int beam_size, int max_len) const;
  Hypothesis greedy(const Seq2SeqInput& input, int max_len) const;

 private:
  struct GraphEncoding {
    ag::Var annotations;
    ag::Var keys;
    nn::LstmState init;
  };
  struct GraphStep {
    ag::Var vocab_dist;
    ag::Var attention;
    ag::Var p_gen;
    nn::LstmState state;
    ag::Var context;
    ag::Var coverage;
  };

  GraphEncoding encode_graph(ag::Graph& g, const Seq2SeqInput& input) const;
  GraphStep step_graph(ag::Graph& g, const GraphEncoding& enc, nn::LstmState prev, ag::Var prev_context,
                       ag::Var coverage, int prev_token) const;
  int input_id(int extended_id) const;

  Seq2SeqConfig cfg_;
  std::unique_ptr<nn::ParamSet> params_;
  ag::Parameter* embed_;
  ag::Parameter* feature_embed_;
  nn::BiLstm encoder_;
  ag::Parameter* bridge_h_;
  ag::Parameter* bridge_hb_;
  ag::Parameter* bridge_c_;
  ag::Parameter* bridge_cb_;
  nn::Lstm decoder_;
  ag::Parameter* att_keys_;
  ag::Parameter* att_query_;
  ag::Parameter* att_bias_;
  ag::Parameter* att_v_;
  ag::Parameter* att_cov_;
  ag::Parameter* out_hidden_;
  ag::Parameter* out_hidden_b_;
  ag::Parameter* out_vocab_;
  ag::Parameter* out_vocab_b_;
  ag::Parameter* gen_w_;
  ag::Parameter* gen_b_;
};

// Teacher-forced training over (input, target) pairs; targets are extended ids
// ending in EOS.
std::vector<double> train_seq2seq(PointerGenerator& net, const std::vector<Seq2SeqInput>& inputs,
                                  const std::vector<std::vector<int>>& targets, const TrainOptions& opts,
                                  long* steps = nullptr);

// Fraction of target tokens that are the argmax of the teacher-forced mixture.
double token_accuracy(const PointerGenerator& net, const std::vector<Seq2SeqInput>& inputs,
                      const std::vector<std::vector<int>>& targets);

void save_pointer_generator(const std::string& dir, Manifest manifest, const PointerGenerator& net,
                            const Vocab& vocab);
// Reads the network configuration from the manifest and restores parameters.
PointerGenerator load_pointer_generator(const std::string& dir, const Manifest& manifest);

}  // namespace hopqa
