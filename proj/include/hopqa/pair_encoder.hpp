#pragma once

#include "hopqa/nn.hpp"

#include <memory>
#include <random>
#include <string>
#include <vector>

namespace hopqa {

struct PairEncoderConfig {
  int vocab_size = 0;
  int embedding_dim = 32;
  int hidden_dim = 48;
  int align_dim = 32;
};

struct PairInput {
  std::vector<int> question_ids;
  std::vector<std::string> question_tokens;
  std::vector<int> context_ids;
  std::vector<std::string> context_tokens;
};

struct PairEncoding {
  ag::Var context;   // output_dim x context length, one column per context token
  ag::Var question;  // output_dim x 1 summary of the question
};

// Encoder backend contract shared by the extractor and the controller: read a
// question/premise pair and produce per-token premise representations plus a
// question summary. Heads on top turn these into span or class scores.
class PairEncoder {
 public:
  virtual ~PairEncoder() = default;
  virtual const std::string& backend_id() const = 0;
  virtual int output_dim() const = 0;
  virtual PairEncoding encode(ag::Graph& g, const PairInput& input) const = 0;
};

// Word embeddings, a question-aligned context feature, exact-match flags and
// bidirectional LSTMs over both sides.
class BiLstmPairEncoder final : public PairEncoder {
 public:
  static const std::string kBackendId;

  BiLstmPairEncoder(nn::ParamSet& params, const PairEncoderConfig& cfg, std::mt19937_64& rng);

  const std::string& backend_id() const override { return kBackendId; }
  int output_dim() const override { return 2 * cfg_.hidden_dim; }
  PairEncoding encode(ag::Graph& g, const PairInput& input) const override;

 private:
  PairEncoderConfig cfg_;
  ag::Parameter* embed_;
  ag::Parameter* align_;
  ag::Parameter* pool_;
  nn::BiLstm question_rnn_;
  nn::BiLstm context_rnn_;
};

// Throws ConfigError for unknown backend ids.
std::unique_ptr<PairEncoder> make_pair_encoder(const std::string& backend_id, nn::ParamSet& params,
                                               const PairEncoderConfig& cfg, std::mt19937_64& rng);

}  // namespace hopqa
