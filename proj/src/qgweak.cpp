#include "hopqa/qgweak.hpp"

#include "hopqa/error.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace hopqa {

void QGConfig::validate() const {
  if (vocab_size <= Vocab::kNumReserved) throw ConfigError("qg vocab_size must exceed the reserved block");
  if (embedding_dim <= 0 || hidden_dim <= 0 || attention_dim <= 0 || feature_dim <= 0) {
    throw ConfigError("qg dimensions must be positive");
  }
  if (max_source_len <= 0 || max_target_len <= 0) throw ConfigError("qg length limits must be positive");
  if (beam_size <= 0) throw ConfigError("qg beam_size must be positive");
  train.validate();
}

namespace {

std::string ascii_lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

Seq2SeqConfig net_config(const QGConfig& cfg, int vocab_size) {
  Seq2SeqConfig c;
  c.vocab_size = vocab_size;
  c.embedding_dim = cfg.embedding_dim;
  c.hidden_dim = cfg.hidden_dim;
  c.attention_dim = cfg.attention_dim;
  c.num_features = 2;
  c.feature_dim = cfg.feature_dim;
  c.coverage = cfg.coverage;
  return c;
}

}  // namespace

std::optional<std::pair<std::size_t, std::size_t>> locate_answer(const std::string& context,
                                                                 const std::string& answer) {
  if (answer.empty()) return std::nullopt;
  if (auto pos = context.find(answer); pos != std::string::npos) return std::make_pair(pos, pos + answer.size());
  if (auto pos = ascii_lower(context).find(ascii_lower(answer)); pos != std::string::npos) {
    return std::make_pair(pos, pos + answer.size());
  }
  const std::string target = normalize_answer(answer);
  if (target.empty()) return std::nullopt;
  const auto toks = tokenize_with_offsets(context);
  for (std::size_t len = 1; len <= toks.size(); ++len) {
    for (std::size_t i = 0; i + len <= toks.size(); ++i) {
      const std::size_t b = toks[i].begin, e = toks[i + len - 1].end;
      if (normalize_answer(std::string_view(context).substr(b, e - b)).find(target) != std::string::npos) {
        return std::make_pair(b, e);
      }
    }
  }
  return std::nullopt;
}

Seq2SeqInput QGModel::make_input(const std::string& context, std::size_t answer_begin, std::size_t answer_end) const {
  const auto toks = tokenize_with_offsets(context);
  std::vector<std::string> words;
  std::vector<int> tags;
  std::size_t first = toks.size(), last = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    words.push_back(toks[i].text);
    const bool inside = toks[i].begin < answer_end && toks[i].end > answer_begin;
    tags.push_back(inside ? 1 : 0);
    if (inside) {
      first = std::min(first, i);
      last = i;
    }
  }
  const auto max_len = static_cast<std::size_t>(cfg_.max_source_len);
  if (words.size() > max_len) {
    std::size_t start = 0;
    if (first < toks.size()) {
      const std::size_t span = last - first + 1;
      const std::size_t slack = span < max_len ? (max_len - span) / 2 : 0;
      start = first > slack ? first - slack : 0;
      start = std::min(start, words.size() - max_len);
    }
    words = std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(start),
                                     words.begin() + static_cast<std::ptrdiff_t>(start + max_len));
    tags = std::vector<int>(tags.begin() + static_cast<std::ptrdiff_t>(start),
                            tags.begin() + static_cast<std::ptrdiff_t>(start + max_len));
  }
  if (words.empty()) {
    // An empty context still needs one position to attend over.
    words.push_back("</s>");
    tags.push_back(0);
  }
  return Seq2SeqInput{encode_source(words, vocab_), tags};
}

std::vector<int> QGModel::make_target(const std::string& question, const EncodedSource& source) const {
  std::vector<int> out;
  for (const auto& t : tokenize(question)) {
    if (static_cast<int>(out.size()) + 1 >= cfg_.max_target_len) break;
    out.push_back(target_extended_id(t, vocab_, source));
  }
  out.push_back(Vocab::kEos);
  return out;
}

void QGModel::save(const std::string& dir, const std::string& config_hash) const {
  Manifest m;
  m.set("kind", std::string("qg"));
  m.set("config_hash", config_hash);
  m.set("answer_encoding", std::string("span-indicator"));
  m.set("max_source_len", static_cast<long long>(cfg_.max_source_len));
  m.set("max_target_len", static_cast<long long>(cfg_.max_target_len));
  m.set("beam_size", static_cast<long long>(cfg_.beam_size));
  save_pointer_generator(dir, m, net_, vocab_);
}

QGModel QGModel::load(const std::string& dir) {
  Manifest m = load_manifest(dir);
  if (!m.has("kind") || m.get("kind") != "qg") throw ValidationError(dir + " is not a question-generation checkpoint");
  Vocab vocab = load_checkpoint_vocab(dir);
  if (m.has("vocab_fingerprint") && m.get("vocab_fingerprint") != std::to_string(vocab.fingerprint())) {
    throw ValidationError(dir + ": vocabulary does not match the manifest");
  }
  PointerGenerator net = load_pointer_generator(dir, m);
  QGConfig cfg;
  cfg.vocab_size = net.config().vocab_size;
  cfg.embedding_dim = net.config().embedding_dim;
  cfg.hidden_dim = net.config().hidden_dim;
  cfg.attention_dim = net.config().attention_dim;
  cfg.feature_dim = net.config().feature_dim;
  cfg.coverage = net.config().coverage;
  cfg.max_source_len = static_cast<int>(m.get_int("max_source_len"));
  cfg.max_target_len = static_cast<int>(m.get_int("max_target_len"));
  cfg.beam_size = static_cast<int>(m.get_int("beam_size"));
  return QGModel(cfg, std::move(vocab), std::move(net));
}

QGModel train_qg(const std::vector<SquadExample>& examples, const QGConfig& cfg, TrainReport* report) {
  cfg.validate();
  struct Usable {
    const SquadExample* ex;
    std::size_t begin, end;
  };
  std::vector<Usable> usable;
  std::size_t skipped = 0;
  for (const auto& ex : examples) {
    if (ex.is_impossible || ex.answer_text.empty()) continue;
    std::optional<std::pair<std::size_t, std::size_t>> span;
    if (ex.answer_start >= 0 && static_cast<std::size_t>(ex.answer_start) + ex.answer_text.size() <= ex.context.size() &&
        ex.context.compare(static_cast<std::size_t>(ex.answer_start), ex.answer_text.size(), ex.answer_text) == 0) {
      span = std::make_pair(static_cast<std::size_t>(ex.answer_start),
                            static_cast<std::size_t>(ex.answer_start) + ex.answer_text.size());
    } else {
      span = locate_answer(ex.context, ex.answer_text);
    }
    if (!span) {
      ++skipped;
      spdlog::warn("qg: answer of {} not found in its context, skipped", ex.id);
      continue;
    }
    usable.push_back({&ex, span->first, span->second});
  }
  if (usable.empty()) throw ValidationError("train_qg: no usable answerable examples");

  std::vector<std::size_t> train_idx, dev_idx;
  split_indices(usable.size(), cfg.train.dev_fraction, cfg.train.seed, train_idx, dev_idx);

  std::vector<std::vector<std::string>> corpora;
  for (std::size_t i : train_idx) {
    corpora.push_back(tokenize(usable[i].ex->context));
    corpora.push_back(tokenize(usable[i].ex->question));
  }
  Vocab vocab = build_vocab(corpora, cfg.vocab_size);
  QGModel model(cfg, vocab, PointerGenerator(net_config(cfg, vocab.size()), cfg.train.seed));

  auto build = [&](const std::vector<std::size_t>& idx, std::vector<Seq2SeqInput>& in, std::vector<std::vector<int>>& tg) {
    for (std::size_t i : idx) {
      in.push_back(model.make_input(usable[i].ex->context, usable[i].begin, usable[i].end));
      tg.push_back(model.make_target(usable[i].ex->question, in.back().source));
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
    report->metrics["skipped"] = static_cast<double>(skipped);
    report->metrics["train_examples"] = static_cast<double>(train_in.size());
    report->metrics["dev_examples"] = static_cast<double>(dev_in.size());
    if (!dev_in.empty()) {
      double nll = 0.0;
      std::size_t n = 0;
      for (std::size_t k = 0; k < dev_in.size(); ++k) {
        for (double p : model.net().target_probabilities(dev_in[k], dev_tg[k])) {
          nll -= std::log(std::max(p, 1e-300));
          ++n;
        }
      }
      report->metrics["dev_perplexity"] = std::exp(nll / static_cast<double>(n));
    }
  }
  return model;
}

WeakFollowup generate_question(const QGModel& model, const std::string& context, const std::string& answer) {
  auto span = locate_answer(context, answer);
  if (!span) throw ValidationError("generate_question: answer '" + answer + "' not found in context");
  Seq2SeqInput input = model.make_input(context, span->first, span->second);
  Hypothesis hyp = model.net().beam_search(input, model.config().beam_size, model.config().max_target_len);
  WeakFollowup out;
  out.beam_score = hyp.score;
  for (int id : hyp.tokens) out.question_tokens.push_back(extended_token(id, model.vocab(), input.source));
  if (out.question_tokens.empty() || out.question_tokens.back() != "?") out.question_tokens.push_back("?");
  return out;
}

std::vector<WeakFollowup> weak_label_followups(const QGModel& model, const std::vector<BridgeExample>& examples) {
  std::vector<WeakFollowup> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    WeakFollowup w = generate_question(model, ex.p2_hat.paragraph_text, ex.answer);
    w.example_id = ex.id;
    w.context_id = ex.p2_hat.title;
    out.push_back(std::move(w));
  }
  return out;
}

void write_weak_labels(std::ostream& out, const std::vector<WeakFollowup>& labels) {
  for (const auto& w : labels) {
    nlohmann::json j = {{"example_id", w.example_id},
                        {"question", w.text()},
                        {"tokens", w.question_tokens},
                        {"beam_score", w.beam_score},
                        {"context_id", w.context_id}};
    out << j.dump() << '\n';
  }
}

std::vector<WeakFollowup> read_weak_labels(std::istream& in) {
  std::vector<WeakFollowup> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      WeakFollowup w;
      w.example_id = j.at("example_id").get<std::string>();
      if (j.contains("tokens")) {
        w.question_tokens = j.at("tokens").get<std::vector<std::string>>();
      } else {
        w.question_tokens = tokenize(j.at("question").get<std::string>());
      }
      w.beam_score = j.value("beam_score", 0.0);
      w.context_id = j.value("context_id", std::string());
      if (w.question_tokens.empty()) throw ParseError("empty question");
      out.push_back(std::move(w));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("weak label line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("weak label line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<WeakFollowup> read_weak_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(path);
  return read_weak_labels(in);
}

}  // namespace hopqa
