#include "hopqa/followupgen.hpp"

#include "hopqa/error.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace hopqa {

void FollowupConfig::validate() const {
  if (vocab_size <= Vocab::kNumReserved) throw ConfigError("followup vocab_size must exceed the reserved block");
  if (embedding_dim <= 0 || hidden_dim <= 0 || attention_dim <= 0 || feature_dim <= 0) {
    throw ConfigError("followup dimensions must be positive");
  }
  if (max_source_len <= 0 || max_target_len <= 0) throw ConfigError("followup length limits must be positive");
  if (beam_size <= 0) throw ConfigError("followup beam_size must be positive");
  if (!(coverage_weight >= 0.0)) throw ConfigError("coverage_weight must be non-negative");
  train.validate();
}

Seq2SeqInput build_source(const std::string& q1, const Premise& p1, const Vocab& vocab, int max_source_len) {
  std::vector<std::string> tokens = tokenize(q1);
  std::vector<int> tags(tokens.size(), kQuestionTag);
  tokens.push_back(Vocab::reserved_tokens()[Vocab::kSep]);
  tags.push_back(kSeparatorTag);
  for (auto& t : tokenize(p1.paragraph_text)) {
    if (static_cast<int>(tokens.size()) >= max_source_len) break;
    tokens.push_back(std::move(t));
    tags.push_back(kPremiseTag);
  }
  return Seq2SeqInput{encode_source(tokens, vocab), std::move(tags)};
}

std::vector<int> FollowupModel::make_target(const std::vector<std::string>& q2_tokens,
                                            const EncodedSource& source) const {
  std::vector<int> out;
  for (const auto& t : q2_tokens) {
    if (static_cast<int>(out.size()) + 1 >= cfg_.max_target_len) break;
    out.push_back(target_extended_id(t, vocab_, source));
  }
  out.push_back(Vocab::kEos);
  return out;
}

std::vector<std::string> FollowupModel::generate_tokens(const std::string& q1, const Premise& p1) const {
  Seq2SeqInput input = make_input(q1, p1);
  Hypothesis hyp = net_.beam_search(input, cfg_.beam_size, cfg_.max_target_len);
  std::vector<std::string> out;
  for (int id : hyp.tokens) out.push_back(extended_token(id, vocab_, input.source));
  if (out.empty() || out.back() != "?") out.push_back("?");
  return out;
}

std::string FollowupModel::generate(const std::string& q1, const Premise& p1) const {
  return detokenize(generate_tokens(q1, p1));
}

void FollowupModel::save(const std::string& dir, const std::string& config_hash) const {
  Manifest m;
  m.set("kind", std::string("followup"));
  m.set("config_hash", config_hash);
  m.set("max_source_len", static_cast<long long>(cfg_.max_source_len));
  m.set("max_target_len", static_cast<long long>(cfg_.max_target_len));
  m.set("beam_size", static_cast<long long>(cfg_.beam_size));
  save_pointer_generator(dir, m, net_, vocab_);
}

FollowupModel FollowupModel::load(const std::string& dir) {
  Manifest m = load_manifest(dir);
  if (!m.has("kind") || m.get("kind") != "followup") throw ValidationError(dir + " is not a followup checkpoint");
  Vocab vocab = load_checkpoint_vocab(dir);
  if (m.has("vocab_fingerprint") && m.get("vocab_fingerprint") != std::to_string(vocab.fingerprint())) {
    throw ValidationError(dir + ": vocabulary does not match the manifest");
  }
  PointerGenerator net = load_pointer_generator(dir, m);
  FollowupConfig cfg;
  cfg.vocab_size = net.config().vocab_size;
  cfg.embedding_dim = net.config().embedding_dim;
  cfg.hidden_dim = net.config().hidden_dim;
  cfg.attention_dim = net.config().attention_dim;
  cfg.feature_dim = net.config().feature_dim;
  cfg.coverage = net.config().coverage;
  cfg.coverage_weight = net.config().coverage_weight;
  cfg.max_source_len = static_cast<int>(m.get_int("max_source_len"));
  cfg.max_target_len = static_cast<int>(m.get_int("max_target_len"));
  cfg.beam_size = static_cast<int>(m.get_int("beam_size"));
  return FollowupModel(cfg, std::move(vocab), std::move(net));
}

namespace {

void check_alignment(const std::vector<BridgeExample>& examples, const std::vector<WeakFollowup>& labels) {
  if (examples.size() != labels.size()) {
    throw ValidationError("followup pairs misaligned: " + std::to_string(examples.size()) + " examples vs " +
                          std::to_string(labels.size()) + " weak labels");
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].id != labels[i].example_id) {
      throw ValidationError("followup pairs misaligned at position " + std::to_string(i) + ": example " +
                            examples[i].id + " vs label " + labels[i].example_id);
    }
  }
}

}  // namespace

FollowupModel train_followup(const std::vector<BridgeExample>& examples, const std::vector<WeakFollowup>& labels,
                             const FollowupConfig& cfg, TrainReport* report) {
  cfg.validate();
  check_alignment(examples, labels);
  if (examples.empty()) throw ValidationError("train_followup: no training pairs");

  std::vector<std::size_t> train_idx, dev_idx;
  split_indices(examples.size(), cfg.train.dev_fraction, cfg.train.seed, train_idx, dev_idx);

  std::vector<std::vector<std::string>> corpora;
  for (std::size_t i : train_idx) {
    corpora.push_back(tokenize(examples[i].q1));
    corpora.push_back(tokenize(examples[i].p1_hat.paragraph_text));
    corpora.push_back(labels[i].question_tokens);
  }
  Vocab vocab = build_vocab(corpora, cfg.vocab_size);
  Seq2SeqConfig net_cfg;
  net_cfg.vocab_size = vocab.size();
  net_cfg.embedding_dim = cfg.embedding_dim;
  net_cfg.hidden_dim = cfg.hidden_dim;
  net_cfg.attention_dim = cfg.attention_dim;
  net_cfg.num_features = 3;
  net_cfg.feature_dim = cfg.feature_dim;
  net_cfg.coverage = cfg.coverage;
  net_cfg.coverage_weight = cfg.coverage_weight;
  FollowupModel model(cfg, vocab, PointerGenerator(net_cfg, cfg.train.seed));

  auto build = [&](const std::vector<std::size_t>& idx, std::vector<Seq2SeqInput>& in,
                   std::vector<std::vector<int>>& tg) {
    for (std::size_t i : idx) {
      in.push_back(model.make_input(examples[i].q1, examples[i].p1_hat));
      tg.push_back(model.make_target(labels[i].question_tokens, in.back().source));
    }
  };
  std::vector<Seq2SeqInput> train_in, dev_in;
  std::vector<std::vector<int>> train_tg, dev_tg;
  build(train_idx, train_in, train_tg);
  build(dev_idx, dev_in, dev_tg);

  long steps = 0;
  auto curve = train_seq2seq(model.net(), train_in, train_tg, cfg.train, &steps);
  if (report != nullptr) {
    report->loss_curve = curve;
    report->steps = steps;
    report->metrics["train_pairs"] = static_cast<double>(train_in.size());
    report->metrics["dev_pairs"] = static_cast<double>(dev_in.size());
    report->metrics["train_token_accuracy"] = token_accuracy(model.net(), train_in, train_tg);
    if (!dev_in.empty()) {
      double nll = 0.0;
      std::size_t n = 0;
      for (std::size_t k = 0; k < dev_in.size(); ++k) {
        for (double p : model.net().target_probabilities(dev_in[k], dev_tg[k])) {
          nll -= std::log(std::max(p, 1e-300));
          ++n;
        }
      }
      report->metrics["dev_loss"] = nll / static_cast<double>(n);
      report->metrics["dev_token_accuracy"] = token_accuracy(model.net(), dev_in, dev_tg);
    }
  }
  spdlog::info("followup: trained on {} pairs in {} steps", train_in.size(), steps);
  return model;
}

double followup_token_accuracy(const FollowupModel& model, const std::vector<BridgeExample>& examples,
                               const std::vector<WeakFollowup>& labels) {
  check_alignment(examples, labels);
  std::vector<Seq2SeqInput> in;
  std::vector<std::vector<int>> tg;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    in.push_back(model.make_input(examples[i].q1, examples[i].p1_hat));
    tg.push_back(model.make_target(labels[i].question_tokens, in.back().source));
  }
  return token_accuracy(model.net(), in, tg);
}

}  // namespace hopqa
