#include "hopqa/extractor.hpp"

#include "hopqa/checkpoint.hpp"
#include "hopqa/error.hpp"
#include "hopqa/metrics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hopqa {

using ag::Matrix;
using ag::Var;

void ExtractorConfig::validate() const {
  if (vocab_size <= Vocab::kNumReserved) throw ConfigError("extractor vocab_size too small");
  if (embedding_dim <= 0 || hidden_dim <= 0 || align_dim <= 0) throw ConfigError("extractor dims must be positive");
  if (max_question_len <= 0 || window_len <= 0 || window_stride <= 0 || max_answer_len <= 0) {
    throw ConfigError("extractor lengths must be positive");
  }
  if (window_stride > window_len) throw ConfigError("window_stride must not exceed window_len");
  if (!std::isfinite(null_threshold)) throw ConfigError("null_threshold must be finite");
  train.validate();
}

BestSpan best_span(const SpanScores& s, int max_len) {
  BestSpan best;
  const std::size_t n = s.start.size();
  if (n == 0) return best;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t stop = std::min(n, i + static_cast<std::size_t>(max_len));
    for (std::size_t j = i; j < stop; ++j) {
      const double v = s.start[i] + s.end[j];
      if (v > top) {
        top = v;
        best.first = i;
        best.last = j;
      }
    }
  }
  best.confidence = top - (s.null_start + s.null_end);
  return best;
}

std::vector<std::size_t> window_starts(std::size_t n, int window_len, int stride) {
  std::vector<std::size_t> out{0};
  const auto len = static_cast<std::size_t>(window_len);
  std::size_t s = 0;
  while (s + len < n) {
    s += static_cast<std::size_t>(stride);
    out.push_back(s);
  }
  return out;
}

ExtractorModel::ExtractorModel(ExtractorConfig cfg, Vocab vocab)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)), params_(std::make_unique<nn::ParamSet>()) {
  std::mt19937_64 rng(cfg_.train.seed);
  PairEncoderConfig ecfg{vocab_.size(), cfg_.embedding_dim, cfg_.hidden_dim, cfg_.align_dim};
  encoder_ = make_pair_encoder(cfg_.backend, *params_, ecfg, rng);
  const int d = encoder_->output_dim();
  start_w_ = &params_->add("ext.start", d, d, rng);
  end_w_ = &params_->add("ext.end", d, d, rng);
  null_w_ = &params_->add("ext.null_w", 2, 2 * d, rng);
  null_b_ = &params_->add_zeros("ext.null_b", 2, 1);
}

PairInput ExtractorModel::make_input(const std::vector<std::string>& q, const std::vector<std::string>& w) const {
  PairInput in;
  const std::size_t qn = std::min(q.size(), static_cast<std::size_t>(cfg_.max_question_len));
  in.question_tokens.assign(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(qn));
  in.context_tokens = w;
  for (const auto& t : in.question_tokens) in.question_ids.push_back(vocab_.id(t));
  for (const auto& t : in.context_tokens) in.context_ids.push_back(vocab_.id(t));
  return in;
}

Var ExtractorModel::head_logits(ag::Graph& g, const PairEncoding& enc, bool start) const {
  // [null; per-token scores]: token scores are bilinear in the token and
  // question representations, the null score reads the question summary and
  // the max-pooled premise.
  Var w = g.parameter(start ? *start_w_ : *end_w_);
  Var tok = ag::matmul_tn(enc.context, ag::matmul(w, enc.question));
  Var nulls = ag::add(ag::matmul(g.parameter(*null_w_), ag::concat_rows({enc.question, ag::max_cols(enc.context)})),
                      g.parameter(*null_b_));
  Var null = ag::slice_rows(nulls, start ? 0 : 1, 1);
  return ag::concat_rows({null, tok});
}

SpanScores ExtractorModel::score_window(const std::vector<std::string>& q, const std::vector<std::string>& w) const {
  SpanScores s;
  if (w.empty()) return s;
  ag::Graph g;
  PairEncoding enc = encoder_->encode(g, make_input(q, w));
  const Matrix& st = head_logits(g, enc, true).value();
  const Matrix& en = head_logits(g, enc, false).value();
  s.null_start = st(0, 0);
  s.null_end = en(0, 0);
  for (Eigen::Index i = 1; i < st.rows(); ++i) {
    s.start.push_back(st(i, 0));
    s.end.push_back(en(i, 0));
  }
  return s;
}

double ExtractorModel::window_loss(const std::vector<std::string>& q, const std::vector<std::string>& w,
                                   int gold_first, int gold_last) {
  if (frozen_) throw FrozenModelError("extractor is frozen");
  if (w.empty()) return 0.0;
  ag::Graph g;
  PairEncoding enc = encoder_->encode(g, make_input(q, w));
  Var ls = ag::log_softmax(head_logits(g, enc, true));
  Var le = ag::log_softmax(head_logits(g, enc, false));
  Var loss = ag::scale(ag::add(ag::pick(ls, gold_first + 1), ag::pick(le, gold_last + 1)), -1.0);
  g.backward(loss);
  return loss.scalar();
}

SpanPrediction ExtractorModel::extract(const std::string& question, const Premise& premise) const {
  if (question.empty()) throw std::invalid_argument("extract: empty question");
  SpanPrediction pred;
  pred.confidence = kNoSpanConfidence;
  const auto toks = tokenize_with_offsets(premise.paragraph_text);
  const auto q = tokenize(question);
  if (toks.empty() || q.empty()) return pred;

  std::size_t best_first = 0, best_last = 0;
  for (std::size_t ws : window_starts(toks.size(), cfg_.window_len, cfg_.window_stride)) {
    const std::size_t we = std::min(toks.size(), ws + static_cast<std::size_t>(cfg_.window_len));
    std::vector<std::string> w;
    for (std::size_t i = ws; i < we; ++i) w.push_back(toks[i].text);
    BestSpan b = best_span(score_window(q, w), cfg_.max_answer_len);
    if (b.confidence > pred.confidence) {
      pred.confidence = b.confidence;
      best_first = ws + b.first;
      best_last = ws + b.last;
    }
  }
  pred.is_null = !(pred.confidence > cfg_.null_threshold);
  if (!pred.is_null) {
    pred.start = toks[best_first].begin;
    pred.end = toks[best_last].end;
    pred.text = premise.paragraph_text.substr(pred.start, pred.end - pred.start);
    if (pred.text.empty() || premise.paragraph_text.compare(pred.start, pred.end - pred.start, pred.text) != 0) {
      throw std::logic_error("span prediction offsets inconsistent with text");
    }
  }
  return pred;
}

void ExtractorModel::save(const std::string& dir, const std::string& config_hash) const {
  Manifest m;
  m.set("kind", std::string("extractor"));
  m.set("backend", cfg_.backend);
  m.set("vocab_fingerprint", std::to_string(vocab_.fingerprint()));
  m.set("vocab_size", static_cast<long long>(vocab_.size()));
  m.set("embedding_dim", static_cast<long long>(cfg_.embedding_dim));
  m.set("hidden_dim", static_cast<long long>(cfg_.hidden_dim));
  m.set("align_dim", static_cast<long long>(cfg_.align_dim));
  m.set("max_question_len", static_cast<long long>(cfg_.max_question_len));
  m.set("window_len", static_cast<long long>(cfg_.window_len));
  m.set("window_stride", static_cast<long long>(cfg_.window_stride));
  m.set("max_answer_len", static_cast<long long>(cfg_.max_answer_len));
  m.set("null_threshold", cfg_.null_threshold);
  m.set("frozen", frozen_);
  m.set("config_hash", config_hash);
  save_checkpoint(dir, m, *params_, vocab_);
}

ExtractorModel ExtractorModel::load(const std::string& dir) {
  Manifest m = load_manifest(dir);
  if (m.get("kind") != "extractor") throw ParseError(dir + " is not an extractor checkpoint");
  ExtractorConfig cfg;
  cfg.backend = m.get("backend");
  cfg.embedding_dim = static_cast<int>(m.get_int("embedding_dim"));
  cfg.hidden_dim = static_cast<int>(m.get_int("hidden_dim"));
  cfg.align_dim = static_cast<int>(m.get_int("align_dim"));
  cfg.max_question_len = static_cast<int>(m.get_int("max_question_len"));
  cfg.window_len = static_cast<int>(m.get_int("window_len"));
  cfg.window_stride = static_cast<int>(m.get_int("window_stride"));
  cfg.max_answer_len = static_cast<int>(m.get_int("max_answer_len"));
  cfg.null_threshold = m.get_double("null_threshold");
  Vocab vocab = load_checkpoint_vocab(dir);
  cfg.vocab_size = vocab.size();
  if (std::to_string(vocab.fingerprint()) != m.get("vocab_fingerprint")) {
    throw ValidationError(dir + ": vocab does not match manifest fingerprint");
  }
  ExtractorModel model(cfg, std::move(vocab));
  load_checkpoint_params(dir, *model.params_);
  model.frozen_ = m.get_bool("frozen");
  return model;
}

namespace {

struct WindowItem {
  std::vector<std::string> question;
  std::vector<std::string> window;
  int first = -1;  // -1: null answer
  int last = -1;
};

std::vector<WindowItem> make_windows(const SquadExample& ex, const ExtractorConfig& cfg) {
  std::vector<WindowItem> out;
  const auto toks = tokenize_with_offsets(ex.context);
  const auto q = tokenize(ex.question);
  if (toks.empty() || q.empty()) return out;
  std::ptrdiff_t a_first = -1, a_last = -1;
  if (!ex.is_impossible) {
    const auto a_begin = static_cast<std::size_t>(ex.answer_start);
    const std::size_t a_end = a_begin + ex.answer_text.size();
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (a_first < 0 && toks[i].end > a_begin) a_first = static_cast<std::ptrdiff_t>(i);
      if (toks[i].begin < a_end) a_last = static_cast<std::ptrdiff_t>(i);
    }
  }
  for (std::size_t ws : window_starts(toks.size(), cfg.window_len, cfg.window_stride)) {
    const std::size_t we = std::min(toks.size(), ws + static_cast<std::size_t>(cfg.window_len));
    WindowItem item;
    item.question = q;
    for (std::size_t i = ws; i < we; ++i) item.window.push_back(toks[i].text);
    if (a_first >= 0 && a_last >= a_first && static_cast<std::size_t>(a_first) >= ws &&
        static_cast<std::size_t>(a_last) < we && a_last - a_first < cfg.max_answer_len) {
      item.first = static_cast<int>(static_cast<std::size_t>(a_first) - ws);
      item.last = static_cast<int>(static_cast<std::size_t>(a_last) - ws);
    }
    out.push_back(std::move(item));
  }
  return out;
}

void fit(ExtractorModel& model, const std::vector<SquadExample>& examples, const std::vector<std::size_t>& idx,
         const TrainOptions& opts, TrainReport* report) {
  std::vector<WindowItem> items;
  for (std::size_t i : idx) {
    auto w = make_windows(examples[i], model.config());
    std::move(w.begin(), w.end(), std::back_inserter(items));
  }
  if (items.empty()) throw ValidationError("no usable extractor training windows");
  long steps = 0;
  auto curve = train_minibatches(
      model.params(), items.size(), opts,
      [&](std::size_t k) { return model.window_loss(items[k].question, items[k].window, items[k].first, items[k].last); },
      &steps);
  if (report != nullptr) {
    report->loss_curve = std::move(curve);
    report->steps = steps;
  }
}

}  // namespace

ExtractorModel train_extractor(const std::vector<SquadExample>& examples, const ExtractorConfig& cfg,
                               TrainReport* report) {
  cfg.validate();
  if (examples.empty()) throw ValidationError("train_extractor: empty training set");
  std::vector<std::size_t> train_idx, dev_idx;
  split_indices(examples.size(), cfg.train.dev_fraction, cfg.train.seed, train_idx, dev_idx);

  std::vector<std::vector<std::string>> corpora;
  for (std::size_t i : train_idx) {
    corpora.push_back(tokenize(examples[i].question));
    corpora.push_back(tokenize(examples[i].context));
  }
  ExtractorModel model(cfg, build_vocab(corpora, cfg.vocab_size));
  TrainReport local;
  TrainReport& rep = report != nullptr ? *report : local;
  fit(model, examples, train_idx, cfg.train, &rep);
  model.freeze();

  std::vector<SquadExample> train_set, dev_set;
  for (std::size_t i : train_idx) train_set.push_back(examples[i]);
  for (std::size_t i : dev_idx) dev_set.push_back(examples[i]);
  ExtractorEval tr = evaluate_extractor(model, train_set);
  rep.metrics["train_em"] = tr.em;
  rep.metrics["train_f1"] = tr.f1;
  if (!dev_set.empty()) {
    ExtractorEval dv = evaluate_extractor(model, dev_set);
    rep.metrics["dev_em"] = dv.em;
    rep.metrics["dev_f1"] = dv.f1;
  }
  spdlog::info("extractor: {} steps, final loss {:.4f}, train EM {:.1f}", rep.steps,
               rep.loss_curve.empty() ? 0.0 : rep.loss_curve.back(), tr.em);
  return model;
}

void continue_training(ExtractorModel& model, const std::vector<SquadExample>& examples, const TrainOptions& opts) {
  if (model.frozen()) throw FrozenModelError("refusing to train a frozen extractor");
  std::vector<std::size_t> idx(examples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  fit(model, examples, idx, opts, nullptr);
}

ExtractorEval evaluate_extractor(const ExtractorModel& model, const std::vector<SquadExample>& examples) {
  ExtractorEval ev;
  for (const auto& ex : examples) {
    Premise p = Premise::from_sentences("context", {ex.context});
    SpanPrediction pred = model.extract(ex.question, p);
    ev.em += exact_match(pred.text, ex.answer_text);
    ev.f1 += f1(pred.text, ex.answer_text);
    ++ev.count;
  }
  if (ev.count > 0) {
    ev.em *= 100.0 / static_cast<double>(ev.count);
    ev.f1 *= 100.0 / static_cast<double>(ev.count);
  }
  return ev;
}

}  // namespace hopqa
