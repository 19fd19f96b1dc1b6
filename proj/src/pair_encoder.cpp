#include "hopqa/pair_encoder.hpp"

#include "hopqa/error.hpp"

#include <unordered_set>

namespace hopqa {

using ag::Matrix;
using ag::Var;

const std::string BiLstmPairEncoder::kBackendId = "bilstm-tiny";

BiLstmPairEncoder::BiLstmPairEncoder(nn::ParamSet& params, const PairEncoderConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg) {
  if (cfg.vocab_size <= 0 || cfg.embedding_dim <= 0 || cfg.hidden_dim <= 0 || cfg.align_dim <= 0) {
    throw ConfigError("pair encoder dimensions must be positive");
  }
  embed_ = &params.add("enc.embed", cfg.embedding_dim, cfg.vocab_size, rng, 0.5);
  align_ = &params.add("enc.align", cfg.align_dim, cfg.embedding_dim, rng);
  pool_ = &params.add("enc.pool", 2 * cfg.hidden_dim, 1, rng);
  question_rnn_ = nn::BiLstm::create(params, "enc.qrnn", cfg.embedding_dim + 1, cfg.hidden_dim, rng);
  context_rnn_ = nn::BiLstm::create(params, "enc.crnn", 2 * cfg.embedding_dim + 1, cfg.hidden_dim, rng);
}

PairEncoding BiLstmPairEncoder::encode(ag::Graph& g, const PairInput& in) const {
  const auto tq = static_cast<Eigen::Index>(in.question_ids.size());
  const auto tc = static_cast<Eigen::Index>(in.context_ids.size());
  std::unordered_set<std::string> qset(in.question_tokens.begin(), in.question_tokens.end());
  std::unordered_set<std::string> cset(in.context_tokens.begin(), in.context_tokens.end());

  Var table = g.parameter(*embed_);
  Var qe = ag::lookup(table, in.question_ids);
  Matrix qmatch(1, tq);
  for (Eigen::Index i = 0; i < tq; ++i) qmatch(0, i) = cset.count(in.question_tokens[i]) != 0 ? 1.0 : 0.0;
  Var qh = question_rnn_.run(g, ag::concat_rows({qe, g.constant(std::move(qmatch))}));

  // Self-attentive question summary.
  Var qweights = ag::softmax(ag::matmul_tn(qh, g.parameter(*pool_)));
  Var qsum = ag::matmul(qh, qweights);

  if (tc == 0) return PairEncoding{g.constant(Matrix::Zero(output_dim(), 0)), qsum};

  Var ce = ag::lookup(table, in.context_ids);
  Matrix cmatch(1, tc);
  for (Eigen::Index i = 0; i < tc; ++i) cmatch(0, i) = qset.count(in.context_tokens[i]) != 0 ? 1.0 : 0.0;
  // Soft alignment of every context token to the question embeddings.
  Var w = g.parameter(*align_);
  Var scores = ag::matmul_tn(ag::relu(ag::matmul(w, qe)), ag::relu(ag::matmul(w, ce)));  // tq x tc
  Var aligned = ag::matmul(qe, ag::softmax_cols(scores));
  Var ch = context_rnn_.run(g, ag::concat_rows({ce, aligned, g.constant(std::move(cmatch))}));
  return PairEncoding{ch, qsum};
}

std::unique_ptr<PairEncoder> make_pair_encoder(const std::string& backend_id, nn::ParamSet& params,
                                               const PairEncoderConfig& cfg, std::mt19937_64& rng) {
  if (backend_id == BiLstmPairEncoder::kBackendId) return std::make_unique<BiLstmPairEncoder>(params, cfg, rng);
  throw ConfigError("unknown encoder backend '" + backend_id + "' (available: " + BiLstmPairEncoder::kBackendId +
                    ")");
}

}  // namespace hopqa
