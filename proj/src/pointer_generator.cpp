#include "hopqa/pointer_generator.hpp"

#include "hopqa/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hopqa {

using ag::Matrix;
using ag::Var;
using ag::Vector;

void Seq2SeqConfig::validate() const {
  if (vocab_size <= Vocab::kNumReserved) throw ConfigError("seq2seq vocab_size too small");
  if (embedding_dim <= 0 || hidden_dim <= 0 || attention_dim <= 0 || num_features <= 0 || feature_dim <= 0) {
    throw ConfigError("seq2seq dimensions must be positive");
  }
  if (!(coverage_weight >= 0.0)) throw ConfigError("coverage_weight must be non-negative");
}

Vector mix_distributions(const Vector& vocab_dist, const Vector& attention, double p_gen,
                         const std::vector<int>& extended_ids, int extended_size) {
  if (attention.size() != static_cast<Eigen::Index>(extended_ids.size())) {
    throw std::invalid_argument("mix_distributions: attention/source length mismatch");
  }
  Vector out = Vector::Zero(extended_size);
  out.head(vocab_dist.size()) = p_gen * vocab_dist;
  for (std::size_t i = 0; i < extended_ids.size(); ++i) {
    out(extended_ids[i]) += (1.0 - p_gen) * attention(static_cast<Eigen::Index>(i));
  }
  return out;
}

PointerGenerator::PointerGenerator(const Seq2SeqConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), params_(std::make_unique<nn::ParamSet>()) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  auto& ps = *params_;
  const int e = cfg.embedding_dim, h = cfg.hidden_dim, a = cfg.attention_dim;
  embed_ = &ps.add("pg.embed", e, cfg.vocab_size, rng, 0.5);
  feature_embed_ = &ps.add("pg.feature_embed", cfg.feature_dim, cfg.num_features, rng, 0.5);
  encoder_ = nn::BiLstm::create(ps, "pg.encoder", e + cfg.feature_dim, h, rng);
  bridge_h_ = &ps.add("pg.bridge_h", h, 2 * h, rng);
  bridge_hb_ = &ps.add_zeros("pg.bridge_hb", h, 1);
  bridge_c_ = &ps.add("pg.bridge_c", h, 2 * h, rng);
  bridge_cb_ = &ps.add_zeros("pg.bridge_cb", h, 1);
  decoder_ = nn::Lstm::create(ps, "pg.decoder", e + 2 * h, h, rng);
  att_keys_ = &ps.add("pg.att_keys", a, 2 * h, rng);
  att_query_ = &ps.add("pg.att_query", a, h, rng);
  att_bias_ = &ps.add_zeros("pg.att_bias", a, 1);
  att_v_ = &ps.add("pg.att_v", a, 1, rng);
  att_cov_ = &ps.add("pg.att_cov", a, 1, rng);
  out_hidden_ = &ps.add("pg.out_hidden", h, 3 * h, rng);
  out_hidden_b_ = &ps.add_zeros("pg.out_hidden_b", h, 1);
  out_vocab_ = &ps.add("pg.out_vocab", cfg.vocab_size, h, rng);
  out_vocab_b_ = &ps.add_zeros("pg.out_vocab_b", cfg.vocab_size, 1);
  gen_w_ = &ps.add("pg.gen_w", 1, 3 * h + e, rng);
  gen_b_ = &ps.add_zeros("pg.gen_b", 1, 1);
}

int PointerGenerator::input_id(int extended_id) const {
  return extended_id < cfg_.vocab_size ? extended_id : Vocab::kUnk;
}

PointerGenerator::GraphEncoding PointerGenerator::encode_graph(ag::Graph& g, const Seq2SeqInput& input) const {
  const auto& ids = input.source.ids;
  if (ids.empty()) throw std::invalid_argument("pointer-generator: empty source");
  if (input.features.size() != ids.size()) throw std::invalid_argument("pointer-generator: feature length mismatch");
  for (int f : input.features) {
    if (f < 0 || f >= cfg_.num_features) throw std::invalid_argument("pointer-generator: feature tag out of range");
  }
  Var x = ag::concat_rows({ag::lookup(g.parameter(*embed_), ids), ag::lookup(g.parameter(*feature_embed_), input.features)});
  nn::LstmState ff, bf;
  Var ann = encoder_.run(g, x, &ff, &bf);
  Var keys = ag::matmul(g.parameter(*att_keys_), ann);
  Var h0 = ag::tanh(ag::add(ag::matmul(g.parameter(*bridge_h_), ag::concat_rows({ff.h, bf.h})), g.parameter(*bridge_hb_)));
  Var c0 = ag::add(ag::matmul(g.parameter(*bridge_c_), ag::concat_rows({ff.c, bf.c})), g.parameter(*bridge_cb_));
  return GraphEncoding{ann, keys, nn::LstmState{h0, c0}};
}

PointerGenerator::GraphStep PointerGenerator::step_graph(ag::Graph& g, const GraphEncoding& enc, nn::LstmState prev,
                                                         Var prev_context, Var coverage, int prev_token) const {
  Var x_emb = ag::lookup(g.parameter(*embed_), {input_id(prev_token)});
  Var x = ag::concat_rows({x_emb, prev_context});
  Var proj = ag::add(ag::matmul(g.parameter(*decoder_.wx), x), g.parameter(*decoder_.b));
  nn::LstmState st = nn::lstm_step(g, decoder_, proj, prev);

  Var query = ag::add(ag::matmul(g.parameter(*att_query_), st.h), g.parameter(*att_bias_));
  Var pre = ag::add_col(enc.keys, query);
  if (cfg_.coverage) pre = ag::add(pre, ag::matmul(g.parameter(*att_cov_), ag::transpose(coverage)));
  Var scores = ag::matmul_tn(ag::tanh(pre), g.parameter(*att_v_));
  Var attention = ag::softmax(scores);
  Var context = ag::matmul(enc.annotations, attention);

  Var hidden = ag::tanh(ag::add(ag::matmul(g.parameter(*out_hidden_), ag::concat_rows({st.h, context})),
                                g.parameter(*out_hidden_b_)));
  Var vocab_dist =
      ag::softmax(ag::add(ag::matmul(g.parameter(*out_vocab_), hidden), g.parameter(*out_vocab_b_)));
  Var p_gen = ag::sigmoid(
      ag::add(ag::matmul(g.parameter(*gen_w_), ag::concat_rows({context, st.h, x_emb})), g.parameter(*gen_b_)));
  return GraphStep{vocab_dist, attention, p_gen, st, context, ag::add(coverage, attention)};
}

Var PointerGenerator::sequence_loss(ag::Graph& g, const Seq2SeqInput& input, const std::vector<int>& target) const {
  if (target.empty()) throw std::invalid_argument("sequence_loss: empty target");
  GraphEncoding enc = encode_graph(g, input);
  const auto src_len = static_cast<Eigen::Index>(input.source.ids.size());
  nn::LstmState state = enc.init;
  Var context = g.constant(Matrix::Zero(2 * cfg_.hidden_dim, 1));
  Var coverage = g.constant(Matrix::Zero(src_len, 1));
  int prev = Vocab::kBos;
  std::vector<Var> terms;
  for (int y : target) {
    GraphStep s = step_graph(g, enc, state, context, coverage, prev);
    std::vector<int> positions;
    for (std::size_t i = 0; i < input.source.extended_ids.size(); ++i) {
      if (input.source.extended_ids[i] == y) positions.push_back(static_cast<int>(i));
    }
    std::vector<Var> parts;
    if (y < cfg_.vocab_size) parts.push_back(ag::scalar_mul(s.p_gen, ag::pick(s.vocab_dist, y)));
    if (!positions.empty()) {
      parts.push_back(ag::scalar_mul(ag::affine(s.p_gen, -1.0, 1.0), ag::sum_rows_at(s.attention, positions)));
    }
    if (parts.empty()) throw std::invalid_argument("sequence_loss: target id outside vocab and source");
    Var prob = parts.size() == 1 ? parts[0] : ag::add(parts[0], parts[1]);
    Var nll = ag::scale(ag::log(prob), -1.0);
    if (cfg_.coverage) {
      nll = ag::add(nll, ag::scale(ag::sum(ag::cwise_min(s.attention, coverage)), cfg_.coverage_weight));
    }
    terms.push_back(nll);
    state = s.state;
    context = s.context;
    coverage = s.coverage;
    prev = y;
  }
  return ag::scale(ag::sum(ag::concat_rows(terms)), 1.0 / static_cast<double>(terms.size()));
}

EncoderOutput PointerGenerator::encode(const Seq2SeqInput& input) const {
  ag::Graph g;
  GraphEncoding enc = encode_graph(g, input);
  return EncoderOutput{enc.annotations.value(), enc.keys.value(), enc.init.h.value().col(0),
                       enc.init.c.value().col(0)};
}

DecoderState PointerGenerator::initial_state(const EncoderOutput& enc) const {
  DecoderState s;
  s.h = enc.init_h;
  s.c = enc.init_c;
  s.context = Vector::Zero(2 * cfg_.hidden_dim);
  s.coverage = Vector::Zero(enc.annotations.cols());
  s.prev_token = Vocab::kBos;
  return s;
}

DecodeStepOutput PointerGenerator::decode_step(const EncoderOutput& enc, const Seq2SeqInput& input,
                                               DecoderState& state) const {
  ag::Graph g;
  GraphEncoding genc{g.constant(enc.annotations), g.constant(enc.attention_keys),
                     nn::LstmState{g.constant(state.h), g.constant(state.c)}};
  GraphStep s = step_graph(g, genc, genc.init, g.constant(state.context), g.constant(state.coverage), state.prev_token);
  DecodeStepOutput out;
  out.vocab_dist = s.vocab_dist.value().col(0);
  out.attention = s.attention.value().col(0);
  out.p_gen = s.p_gen.scalar();
  out.mixture = mix_distributions(out.vocab_dist, out.attention, out.p_gen, input.source.extended_ids,
                                  input.source.extended_size_for(cfg_.vocab_size));
  state.h = s.state.h.value().col(0);
  state.c = s.state.c.value().col(0);
  state.context = s.context.value().col(0);
  state.coverage = s.coverage.value().col(0);
  return out;
}

std::vector<double> PointerGenerator::target_probabilities(const Seq2SeqInput& input,
                                                           const std::vector<int>& target) const {
  EncoderOutput enc = encode(input);
  DecoderState st = initial_state(enc);
  std::vector<double> out;
  for (int y : target) {
    DecodeStepOutput o = decode_step(enc, input, st);
    out.push_back(y < o.mixture.size() ? o.mixture(y) : 0.0);
    st.prev_token = y;
  }
  return out;
}

namespace {

bool emittable(int id) { return id == Vocab::kEos || id >= Vocab::kNumReserved; }

struct Beam {
  Hypothesis hyp;
  DecoderState state;
};

}  // namespace

Hypothesis PointerGenerator::beam_search(const Seq2SeqInput& input, int beam_size, int max_len) const {
  if (beam_size <= 0) throw ConfigError("beam size must be positive");
  if (max_len <= 0) throw ConfigError("max decode length must be positive");
  EncoderOutput enc = encode(input);
  std::vector<Beam> beams{Beam{Hypothesis{}, initial_state(enc)}};
  std::vector<Hypothesis> finished;

  struct Candidate {
    double log_prob;
    std::size_t beam;
    int token;
  };
  for (int step = 0; step < max_len && !beams.empty(); ++step) {
    std::vector<Candidate> cands;
    std::vector<DecoderState> advanced;
    for (std::size_t b = 0; b < beams.size(); ++b) {
      DecoderState st = beams[b].state;
      DecodeStepOutput out = decode_step(enc, input, st);
      advanced.push_back(st);
      std::vector<int> ids;
      for (int k = 0; k < out.mixture.size(); ++k) {
        if (emittable(k) && out.mixture(k) > 0.0) ids.push_back(k);
      }
      const std::size_t keep = std::min(ids.size(), static_cast<std::size_t>(beam_size));
      std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), ids.end(), [&](int x, int y) {
        return out.mixture(x) != out.mixture(y) ? out.mixture(x) > out.mixture(y) : x < y;
      });
      for (std::size_t k = 0; k < keep; ++k) {
        cands.push_back(Candidate{beams[b].hyp.log_prob + std::log(out.mixture(ids[k])), b, ids[k]});
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& x, const Candidate& y) { return x.log_prob > y.log_prob; });
    if (cands.size() > static_cast<std::size_t>(beam_size)) cands.resize(static_cast<std::size_t>(beam_size));
    std::vector<Beam> next;
    for (const Candidate& c : cands) {
      Hypothesis h = beams[c.beam].hyp;
      h.log_prob = c.log_prob;
      if (c.token == Vocab::kEos) {
        h.finished = true;
        h.score = h.log_prob / static_cast<double>(h.tokens.size() + 1);
        finished.push_back(std::move(h));
      } else {
        h.tokens.push_back(c.token);
        DecoderState st = advanced[c.beam];
        st.prev_token = c.token;
        next.push_back(Beam{std::move(h), std::move(st)});
      }
    }
    beams = std::move(next);
    if (finished.size() >= static_cast<std::size_t>(beam_size)) break;
  }
  if (finished.empty()) {
    for (auto& b : beams) {
      b.hyp.score = b.hyp.log_prob / static_cast<double>(std::max<std::size_t>(1, b.hyp.tokens.size()));
      finished.push_back(b.hyp);
    }
  }
  if (finished.empty()) return Hypothesis{};
  auto best = std::max_element(finished.begin(), finished.end(),
                               [](const Hypothesis& x, const Hypothesis& y) { return x.score < y.score; });
  return *best;
}

Hypothesis PointerGenerator::greedy(const Seq2SeqInput& input, int max_len) const {
  EncoderOutput enc = encode(input);
  DecoderState st = initial_state(enc);
  Hypothesis h;
  for (int step = 0; step < max_len; ++step) {
    DecodeStepOutput out = decode_step(enc, input, st);
    int best = -1;
    for (int k = 0; k < out.mixture.size(); ++k) {
      if (!emittable(k) || !(out.mixture(k) > 0.0)) continue;
      if (best < 0 || out.mixture(k) > out.mixture(best)) best = k;
    }
    if (best < 0) break;
    h.log_prob += std::log(out.mixture(best));
    if (best == Vocab::kEos) {
      h.finished = true;
      h.score = h.log_prob / static_cast<double>(h.tokens.size() + 1);
      return h;
    }
    h.tokens.push_back(best);
    st.prev_token = best;
  }
  h.score = h.log_prob / static_cast<double>(std::max<std::size_t>(1, h.tokens.size()));
  return h;
}

std::vector<double> train_seq2seq(PointerGenerator& net, const std::vector<Seq2SeqInput>& inputs,
                                  const std::vector<std::vector<int>>& targets, const TrainOptions& opts,
                                  long* steps) {
  if (inputs.size() != targets.size()) throw std::invalid_argument("train_seq2seq: size mismatch");
  return train_minibatches(
      net.params(), inputs.size(), opts,
      [&](std::size_t k) {
        ag::Graph g;
        Var loss = net.sequence_loss(g, inputs[k], targets[k]);
        g.backward(loss);
        return loss.scalar();
      },
      steps);
}

double token_accuracy(const PointerGenerator& net, const std::vector<Seq2SeqInput>& inputs,
                      const std::vector<std::vector<int>>& targets) {
  std::size_t hit = 0, total = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    EncoderOutput enc = net.encode(inputs[k]);
    DecoderState st = net.initial_state(enc);
    for (int y : targets[k]) {
      DecodeStepOutput out = net.decode_step(enc, inputs[k], st);
      Eigen::Index best = 0;
      out.mixture.maxCoeff(&best);
      hit += best == y ? 1 : 0;
      ++total;
      st.prev_token = y;
    }
  }
  return total > 0 ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

void save_pointer_generator(const std::string& dir, Manifest m, const PointerGenerator& net, const Vocab& vocab) {
  const Seq2SeqConfig& c = net.config();
  m.set("vocab_size", static_cast<long long>(c.vocab_size));
  m.set("embedding_dim", static_cast<long long>(c.embedding_dim));
  m.set("hidden_dim", static_cast<long long>(c.hidden_dim));
  m.set("attention_dim", static_cast<long long>(c.attention_dim));
  m.set("num_features", static_cast<long long>(c.num_features));
  m.set("feature_dim", static_cast<long long>(c.feature_dim));
  m.set("coverage", c.coverage);
  m.set("coverage_weight", c.coverage_weight);
  m.set("vocab_fingerprint", std::to_string(vocab.fingerprint()));
  save_checkpoint(dir, m, net.params(), vocab);
}

PointerGenerator load_pointer_generator(const std::string& dir, const Manifest& m) {
  Seq2SeqConfig c;
  c.vocab_size = static_cast<int>(m.get_int("vocab_size"));
  c.embedding_dim = static_cast<int>(m.get_int("embedding_dim"));
  c.hidden_dim = static_cast<int>(m.get_int("hidden_dim"));
  c.attention_dim = static_cast<int>(m.get_int("attention_dim"));
  c.num_features = static_cast<int>(m.get_int("num_features"));
  c.feature_dim = static_cast<int>(m.get_int("feature_dim"));
  c.coverage = m.get_bool("coverage");
  c.coverage_weight = m.get_double("coverage_weight");
  PointerGenerator net(c, 0);
  load_checkpoint_params(dir, net.params());
  return net;
}

}  // namespace hopqa
