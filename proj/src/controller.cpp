#include "hopqa/controller.hpp"

#include "hopqa/checkpoint.hpp"
#include "hopqa/error.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <tuple>
#include <unordered_map>

namespace hopqa {

using ag::Var;

const char* rule_name(TripleRule r) {
  switch (r) {
    case TripleRule::kIntermediate: return "intermediate";
    case TripleRule::kFinal: return "final";
    case TripleRule::kFinalRejected: return "final-rejected";
    case TripleRule::kOther: return "other";
  }
  return "other";
}

TripleRule rule_from_name(const std::string& name) {
  for (auto r : {TripleRule::kIntermediate, TripleRule::kFinal, TripleRule::kFinalRejected, TripleRule::kOther}) {
    if (name == rule_name(r)) return r;
  }
  throw ParseError("unknown triple rule: " + name);
}

bool answers_overlap(const std::string& extracted, const std::string& gold) {
  const auto a = normalized_tokens(extracted);
  const auto b = normalized_tokens(gold);
  for (const auto& t : a) {
    if (std::find(b.begin(), b.end(), t) != b.end()) return true;
  }
  return false;
}

std::vector<ControllerTriple> build_controller_dataset(const std::vector<BridgeExample>& examples,
                                                       const SingleHopReader& extractor) {
  if (!extractor.frozen()) throw ValidationError("build_controller_dataset: extractor must be frozen");
  std::vector<ControllerTriple> out;
  for (const auto& ex : examples) {
    const auto premises = ex.premises();
    const SpanPrediction on_p2 = extractor.extract(ex.q1, ex.p2_hat);
    const bool final_ok = !on_p2.is_null && answers_overlap(on_p2.text, ex.answer);
    for (std::size_t i = 0; i < premises.size(); ++i) {
      ControllerTriple t;
      t.example_id = ex.id;
      t.question = ex.q1;
      t.premise = premises[i];
      if (i == ex.p1_position) {
        t.label = Label::kIntermediate;
        t.rule = TripleRule::kIntermediate;
      } else if (i == ex.p2_position) {
        t.label = final_ok ? Label::kFinal : Label::kIrrel;
        t.rule = final_ok ? TripleRule::kFinal : TripleRule::kFinalRejected;
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

void ControllerConfig::validate() const {
  if (vocab_size <= Vocab::kNumReserved) throw ConfigError("controller vocab_size too small");
  if (embedding_dim <= 0 || hidden_dim <= 0 || align_dim <= 0 || mlp_dim <= 0) {
    throw ConfigError("controller dims must be positive");
  }
  if (max_question_len <= 0 || max_premise_len <= 0) throw ConfigError("controller lengths must be positive");
  if (!(irrel_keep_fraction > 0.0 && irrel_keep_fraction <= 1.0)) {
    throw ConfigError("irrel_keep_fraction must be in (0, 1]");
  }
  train.validate();
}

ControllerModel::ControllerModel(ControllerConfig cfg, Vocab vocab)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)), params_(std::make_unique<nn::ParamSet>()) {
  std::mt19937_64 rng(cfg_.train.seed);
  PairEncoderConfig ecfg{vocab_.size(), cfg_.embedding_dim, cfg_.hidden_dim, cfg_.align_dim};
  encoder_ = make_pair_encoder(cfg_.backend, *params_, ecfg, rng);
  const int d = encoder_->output_dim();
  hidden_w_ = &params_->add("ctl.hidden", cfg_.mlp_dim, 3 * d, rng);
  hidden_b_ = &params_->add_zeros("ctl.hidden_b", cfg_.mlp_dim, 1);
  out_w_ = &params_->add("ctl.out", 3, cfg_.mlp_dim, rng);
  out_b_ = &params_->add_zeros("ctl.out_b", 3, 1);
}

Var ControllerModel::logits(ag::Graph& g, const std::string& question, const Premise& premise) const {
  PairInput in;
  in.question_tokens = tokenize(question);
  if (in.question_tokens.empty()) throw std::invalid_argument("controller: empty question");
  if (static_cast<int>(in.question_tokens.size()) > cfg_.max_question_len) in.question_tokens.resize(cfg_.max_question_len);
  in.context_tokens = tokenize(premise.paragraph_text);
  if (static_cast<int>(in.context_tokens.size()) > cfg_.max_premise_len) in.context_tokens.resize(cfg_.max_premise_len);
  // An empty premise is read as a single end-of-sequence token.
  if (in.context_tokens.empty()) in.context_tokens.push_back(Vocab::reserved_tokens()[Vocab::kEos]);
  for (const auto& t : in.question_tokens) in.question_ids.push_back(vocab_.id(t));
  for (const auto& t : in.context_tokens) in.context_ids.push_back(vocab_.id(t));
  PairEncoding enc = encoder_->encode(g, in);
  Var pooled = ag::concat_rows({enc.question, ag::max_cols(enc.context), ag::mean_cols(enc.context)});
  Var h = ag::tanh(ag::add(ag::matmul(g.parameter(*hidden_w_), pooled), g.parameter(*hidden_b_)));
  return ag::add(ag::matmul(g.parameter(*out_w_), h), g.parameter(*out_b_));
}

std::array<double, 3> ControllerModel::scores(const std::string& question, const Premise& premise) const {
  ag::Graph g;
  const auto& v = logits(g, question, premise).value();
  return {v(0, 0), v(1, 0), v(2, 0)};
}

Verdict ControllerModel::classify(const std::string& question, const Premise& premise) const {
  return verdict_from_scores(scores(question, premise));
}

double ControllerModel::pair_loss(const std::string& question, const Premise& premise, Label label, double weight) {
  ag::Graph g;
  Var nll = ag::scale(ag::pick(ag::log_softmax(logits(g, question, premise)), static_cast<int>(label)), -weight);
  g.backward(nll);
  return nll.scalar();
}

void ControllerModel::save(const std::string& dir, const std::string& config_hash) const {
  Manifest m;
  m.set("kind", std::string("controller"));
  m.set("backend", cfg_.backend);
  m.set("vocab_fingerprint", std::to_string(vocab_.fingerprint()));
  m.set("vocab_size", static_cast<long long>(vocab_.size()));
  m.set("embedding_dim", static_cast<long long>(cfg_.embedding_dim));
  m.set("hidden_dim", static_cast<long long>(cfg_.hidden_dim));
  m.set("align_dim", static_cast<long long>(cfg_.align_dim));
  m.set("mlp_dim", static_cast<long long>(cfg_.mlp_dim));
  m.set("max_question_len", static_cast<long long>(cfg_.max_question_len));
  m.set("max_premise_len", static_cast<long long>(cfg_.max_premise_len));
  m.set("config_hash", config_hash);
  save_checkpoint(dir, m, *params_, vocab_);
}

ControllerModel ControllerModel::load(const std::string& dir) {
  Manifest m = load_manifest(dir);
  if (!m.has("kind") || m.get("kind") != "controller") throw ParseError(dir + " is not a controller checkpoint");
  ControllerConfig cfg;
  cfg.backend = m.get("backend");
  cfg.embedding_dim = static_cast<int>(m.get_int("embedding_dim"));
  cfg.hidden_dim = static_cast<int>(m.get_int("hidden_dim"));
  cfg.align_dim = static_cast<int>(m.get_int("align_dim"));
  cfg.mlp_dim = static_cast<int>(m.get_int("mlp_dim"));
  cfg.max_question_len = static_cast<int>(m.get_int("max_question_len"));
  cfg.max_premise_len = static_cast<int>(m.get_int("max_premise_len"));
  Vocab vocab = load_checkpoint_vocab(dir);
  cfg.vocab_size = vocab.size();
  if (std::to_string(vocab.fingerprint()) != m.get("vocab_fingerprint")) {
    throw ValidationError(dir + ": vocab does not match manifest fingerprint");
  }
  ControllerModel model(cfg, std::move(vocab));
  load_checkpoint_params(dir, *model.params_);
  return model;
}

namespace {

struct Item {
  const ControllerTriple* triple;
  double weight;
};

std::vector<Item> merge_duplicates(const std::vector<ControllerTriple>& triples) {
  std::vector<Item> items;
  std::map<std::tuple<std::string, std::string, std::string, int>, std::size_t> index;
  for (const auto& t : triples) {
    if (!(t.weight > 0.0)) throw ValidationError("controller triple weight must be positive");
    auto key = std::make_tuple(t.question, t.premise.title, t.premise.paragraph_text, static_cast<int>(t.label));
    auto [it, inserted] = index.emplace(key, items.size());
    if (inserted) {
      items.push_back({&t, t.weight});
    } else {
      items[it->second].weight += t.weight;
    }
  }
  return items;
}

std::string histogram(const std::array<double, 3>& counts) {
  std::string s;
  for (int c = 0; c < 3; ++c) {
    if (!s.empty()) s += ", ";
    s += std::string(label_name(static_cast<Label>(c))) + "=" + std::to_string(static_cast<long long>(counts[c]));
  }
  return s;
}

}  // namespace

ControllerModel train_controller(const std::vector<ControllerTriple>& triples, const ControllerConfig& cfg,
                                 TrainReport* report) {
  cfg.validate();
  if (triples.empty()) throw ValidationError("train_controller: no triples");
  std::vector<Item> items = merge_duplicates(triples);

  if (cfg.irrel_keep_fraction < 1.0) {
    std::mt19937_64 rng(cfg.train.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Item> kept;
    for (const auto& it : items) {
      const bool drop = it.triple->label == Label::kIrrel && u(rng) >= cfg.irrel_keep_fraction;
      if (!drop) kept.push_back(it);
    }
    items = std::move(kept);
  }

  std::array<double, 3> counts{0.0, 0.0, 0.0};
  for (const auto& it : items) counts[static_cast<int>(it.triple->label)] += it.weight;
  for (double c : counts) {
    if (c <= 0.0) throw ValidationError("train_controller: a label class is missing (" + histogram(counts) + ")");
  }
  std::array<double, 3> class_w{1.0, 1.0, 1.0};
  if (cfg.class_weighting) {
    const double total = counts[0] + counts[1] + counts[2];
    for (int c = 0; c < 3; ++c) class_w[c] = total / (3.0 * counts[c]);
  }

  std::vector<std::size_t> train_idx, dev_idx;
  split_indices(items.size(), cfg.train.dev_fraction, cfg.train.seed, train_idx, dev_idx);

  std::vector<std::vector<std::string>> corpora;
  std::unordered_map<std::string, bool> seen_premise;
  for (std::size_t i : train_idx) {
    const auto& t = *items[i].triple;
    corpora.push_back(tokenize(t.question));
    if (seen_premise.emplace(t.premise.title + '\n' + t.premise.paragraph_text, true).second) {
      corpora.push_back(tokenize(t.premise.paragraph_text));
    }
  }
  ControllerModel model(cfg, build_vocab(corpora, cfg.vocab_size));

  long steps = 0;
  auto curve = train_minibatches(
      model.params(), train_idx.size(), cfg.train,
      [&](std::size_t k) {
        const Item& it = items[train_idx[k]];
        const ControllerTriple& t = *it.triple;
        return model.pair_loss(t.question, t.premise, t.label, it.weight * class_w[static_cast<int>(t.label)]);
      },
      &steps);

  TrainReport local;
  TrainReport& rep = report != nullptr ? *report : local;
  rep.loss_curve = curve;
  rep.steps = steps;
  auto accuracy = [&](const std::vector<std::size_t>& idx, const std::string& prefix) {
    std::array<double, 3> hit{0, 0, 0}, tot{0, 0, 0};
    for (std::size_t i : idx) {
      const auto& t = *items[i].triple;
      const int c = static_cast<int>(t.label);
      tot[c] += 1.0;
      if (model.classify(t.question, t.premise).label == t.label) hit[c] += 1.0;
    }
    double all_hit = 0.0, all_tot = 0.0;
    for (int c = 0; c < 3; ++c) {
      all_hit += hit[c];
      all_tot += tot[c];
      if (tot[c] > 0) rep.metrics[prefix + "_acc_" + label_name(static_cast<Label>(c))] = hit[c] / tot[c];
    }
    if (all_tot > 0) rep.metrics[prefix + "_acc"] = all_hit / all_tot;
  };
  accuracy(train_idx, "train");
  if (!dev_idx.empty()) accuracy(dev_idx, "dev");
  rep.metrics["items"] = static_cast<double>(items.size());
  spdlog::info("controller: {} merged items ({}), {} steps", items.size(), histogram(counts), steps);
  return model;
}

void write_triples(std::ostream& out, const std::vector<ControllerTriple>& triples) {
  for (const auto& t : triples) {
    nlohmann::json j = {{"example_id", t.example_id},  {"question", t.question},
                        {"title", t.premise.title},     {"premise", to_json(t.premise)},
                        {"label", label_name(t.label)}, {"rule", rule_name(t.rule)},
                        {"weight", t.weight}};
    out << j.dump() << '\n';
  }
}

std::vector<ControllerTriple> read_triples(std::istream& in) {
  std::vector<ControllerTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      ControllerTriple t;
      t.example_id = j.at("example_id").get<std::string>();
      t.question = j.at("question").get<std::string>();
      t.premise = premise_from_json(j.at("premise"));
      t.label = label_from_name(j.at("label").get<std::string>());
      t.rule = rule_from_name(j.at("rule").get<std::string>());
      t.weight = j.value("weight", 1.0);
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("triple line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError("triple line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ControllerTriple> read_triples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(path);
  return read_triples(in);
}

}  // namespace hopqa
