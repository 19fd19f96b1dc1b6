#include "hopqa/pipeline.hpp"

#include "hopqa/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>
#include <ostream>

namespace hopqa {

const char* variant_name(OracleVariant v) {
  switch (v) {
    case OracleVariant::kTrainedQ2: return "trained_q2";
    case OracleVariant::kQ2EqualsQ1: return "q2_equals_q1";
    case OracleVariant::kQ1ElseQ2: return "q1_else_q2";
  }
  return "?";
}

OracleVariant variant_from_name(const std::string& name) {
  for (auto v : {OracleVariant::kTrainedQ2, OracleVariant::kQ2EqualsQ1, OracleVariant::kQ1ElseQ2}) {
    if (name == variant_name(v)) return v;
  }
  throw ConfigError("unknown oracle variant '" + name + "' (expected trained_q2, q2_equals_q1 or q1_else_q2)");
}

std::optional<std::size_t> select_best(const std::vector<ExtractionRecord>& extractions) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < extractions.size(); ++i) {
    const auto& p = extractions[i].prediction;
    if (p.is_null) continue;
    if (!best || p.confidence > extractions[*best].prediction.confidence) best = i;
  }
  return best;
}

namespace {

constexpr const char* kFullMode = "full";

std::optional<std::size_t> first_non_null(const std::vector<ExtractionRecord>& extractions) {
  for (std::size_t i = 0; i < extractions.size(); ++i) {
    if (!extractions[i].prediction.is_null) return i;
  }
  return std::nullopt;
}

// How a trace's answer is picked from its extractions.
std::optional<std::size_t> choose(const HopTrace& t) {
  return t.mode == variant_name(OracleVariant::kQ1ElseQ2) ? first_non_null(t.extractions) : select_best(t.extractions);
}

PredictedAnswer finish(HopTrace trace) {
  trace.chosen = choose(trace);
  PredictedAnswer out;
  out.example_id = trace.example_id;
  if (trace.chosen) {
    const auto& p = trace.extractions[*trace.chosen].prediction;
    trace.answer = p.text;
    out.confidence = p.confidence;
  }
  out.answer = trace.answer;
  out.trace = std::move(trace);
  return out;
}

void require(const void* model, const char* what) {
  if (model == nullptr) throw std::invalid_argument(std::string("pipeline: missing ") + what);
}

}  // namespace

PredictedAnswer run_oracle(const BridgeExample& ex, OracleVariant variant, const Models& models) {
  require(models.extractor, "extractor");
  if (variant != OracleVariant::kQ2EqualsQ1) require(models.followup, "followup generator");
  HopTrace t;
  t.example_id = ex.id;
  t.mode = variant_name(variant);
  t.hops = 2;

  auto extract_p2 = [&](const std::string& q) {
    t.extractions.push_back({2, q, ex.p2_hat.title, ex.p2_position, models.extractor->extract(q, ex.p2_hat)});
  };
  auto followup = [&]() {
    std::string q2 = models.followup->generate(ex.q1, ex.p1_hat);
    t.followups.push_back({1, ex.q1, ex.p1_hat.title, ex.p1_position, q2});
    return q2;
  };

  switch (variant) {
    case OracleVariant::kTrainedQ2:
      extract_p2(followup());
      break;
    case OracleVariant::kQ2EqualsQ1:
      extract_p2(ex.q1);
      break;
    case OracleVariant::kQ1ElseQ2:
      extract_p2(ex.q1);
      // The Q2 extraction is recorded even when Q1 already answered, so the
      // trace shows both candidates.
      extract_p2(followup());
      break;
  }
  return finish(std::move(t));
}

PredictedAnswer run_full(const BridgeExample& ex, const Models& models, const PipelineConfig& cfg) {
  require(models.extractor, "extractor");
  require(models.followup, "followup generator");
  require(models.controller, "controller");
  if (cfg.max_hops < 1 || cfg.max_hops > 2) throw ConfigError("max_hops must be 1 or 2");
  const auto premises = ex.premises();
  HopTrace t;
  t.example_id = ex.id;
  t.mode = kFullMode;
  t.hops = 1;

  for (std::size_t i = 0; i < premises.size(); ++i) {
    Verdict v = models.controller->classify(ex.q1, premises[i]);
    std::string action = "none";
    if (v.label == Label::kFinal) {
      t.extractions.push_back({1, ex.q1, premises[i].title, i, models.extractor->extract(ex.q1, premises[i])});
      action = "extract";
    } else if (v.label == Label::kIntermediate) {
      t.followups.push_back({1, ex.q1, premises[i].title, i, models.followup->generate(ex.q1, premises[i])});
      action = "followup";
    }
    t.verdicts.push_back({1, ex.q1, premises[i].title, i, v, action});
  }

  if (!select_best(t.extractions) && cfg.max_hops >= 2 && !t.followups.empty()) {
    t.hops = 2;
    const auto hop1_followups = t.followups;
    for (const auto& f : hop1_followups) {
      for (std::size_t j = 0; j < premises.size(); ++j) {
        if (j == f.premise_index) continue;
        Verdict v = models.controller->classify(f.followup, premises[j]);
        std::string action = "none";
        if (v.label == Label::kFinal) {
          t.extractions.push_back({2, f.followup, premises[j].title, j, models.extractor->extract(f.followup, premises[j])});
          action = "extract";
        }
        t.verdicts.push_back({2, f.followup, premises[j].title, j, v, action});
      }
    }
  }
  return finish(std::move(t));
}

RunCounters count_requests(const std::vector<PredictedAnswer>& answers) {
  RunCounters c;
  for (const auto& a : answers) {
    c.followups += a.trace.followups.size();
    for (const auto& e : a.trace.extractions) (e.hop == 1 ? c.hop1_extractions : c.hop2_extractions) += 1;
  }
  return c;
}

std::optional<std::string> replay_trace(const HopTrace& trace, const BridgeExample& example,
                                        const SingleHopReader& extractor) {
  if (trace.example_id != example.id) return std::nullopt;
  const auto premises = example.premises();
  for (const auto& e : trace.extractions) {
    if (e.premise_index >= premises.size() || premises[e.premise_index].title != e.premise_title) return std::nullopt;
    SpanPrediction again = extractor.extract(e.question, premises[e.premise_index]);
    const double scale = std::max(1.0, std::abs(e.prediction.confidence));
    if (again.is_null != e.prediction.is_null || again.text != e.prediction.text ||
        std::abs(again.confidence - e.prediction.confidence) > 1e-9 * scale) {
      return std::nullopt;
    }
  }
  auto chosen = choose(trace);
  if (chosen != trace.chosen) return std::nullopt;
  return chosen ? trace.extractions[*chosen].prediction.text : std::string();
}

namespace {

nlohmann::json span_json(const SpanPrediction& p) {
  return {{"text", p.text}, {"start", p.start}, {"end", p.end}, {"confidence", p.confidence}, {"is_null", p.is_null}};
}

SpanPrediction span_from_json(const nlohmann::json& j) {
  SpanPrediction p;
  p.text = j.at("text").get<std::string>();
  p.start = j.at("start").get<std::size_t>();
  p.end = j.at("end").get<std::size_t>();
  p.confidence = j.at("confidence").get<double>();
  p.is_null = j.at("is_null").get<bool>();
  return p;
}

}  // namespace

nlohmann::json to_json(const HopTrace& t) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : t.verdicts) {
    verdicts.push_back({{"hop", v.hop},
                        {"question", v.question},
                        {"title", v.premise_title},
                        {"index", v.premise_index},
                        {"label", label_name(v.verdict.label)},
                        {"probs", v.verdict.probs},
                        {"action", v.action}});
  }
  nlohmann::json followups = nlohmann::json::array();
  for (const auto& f : t.followups) {
    followups.push_back({{"hop", f.hop},
                         {"source_question", f.source_question},
                         {"title", f.premise_title},
                         {"index", f.premise_index},
                         {"followup", f.followup}});
  }
  nlohmann::json extractions = nlohmann::json::array();
  for (const auto& e : t.extractions) {
    extractions.push_back({{"hop", e.hop},
                           {"question", e.question},
                           {"title", e.premise_title},
                           {"index", e.premise_index},
                           {"prediction", span_json(e.prediction)}});
  }
  nlohmann::json j = {{"example_id", t.example_id}, {"mode", t.mode},           {"hops", t.hops},
                      {"verdicts", verdicts},       {"followups", followups},   {"extractions", extractions},
                      {"answer", t.answer}};
  j["chosen"] = t.chosen ? nlohmann::json(*t.chosen) : nlohmann::json(nullptr);
  return j;
}

HopTrace hop_trace_from_json(const nlohmann::json& j) {
  HopTrace t;
  t.example_id = j.at("example_id").get<std::string>();
  t.mode = j.at("mode").get<std::string>();
  t.hops = j.at("hops").get<int>();
  for (const auto& v : j.at("verdicts")) {
    VerdictRecord r;
    r.hop = v.at("hop").get<int>();
    r.question = v.at("question").get<std::string>();
    r.premise_title = v.at("title").get<std::string>();
    r.premise_index = v.at("index").get<std::size_t>();
    r.verdict.label = label_from_name(v.at("label").get<std::string>());
    r.verdict.probs = v.at("probs").get<std::array<double, 3>>();
    r.action = v.at("action").get<std::string>();
    t.verdicts.push_back(std::move(r));
  }
  for (const auto& f : j.at("followups")) {
    t.followups.push_back({f.at("hop").get<int>(), f.at("source_question").get<std::string>(),
                           f.at("title").get<std::string>(), f.at("index").get<std::size_t>(),
                           f.at("followup").get<std::string>()});
  }
  for (const auto& e : j.at("extractions")) {
    t.extractions.push_back({e.at("hop").get<int>(), e.at("question").get<std::string>(),
                             e.at("title").get<std::string>(), e.at("index").get<std::size_t>(),
                             span_from_json(e.at("prediction"))});
  }
  if (!j.at("chosen").is_null()) t.chosen = j.at("chosen").get<std::size_t>();
  t.answer = j.at("answer").get<std::string>();
  return t;
}

void write_predictions(std::ostream& out, const std::vector<PredictedAnswer>& answers) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& a : answers) j[a.example_id] = {{"answer", a.answer}, {"confidence", a.confidence}};
  out << j.dump(2) << '\n';
}

void write_traces(std::ostream& out, const std::vector<PredictedAnswer>& answers) {
  for (const auto& a : answers) out << to_json(a.trace).dump() << '\n';
}

std::vector<HopTrace> read_traces(std::istream& in) {
  std::vector<HopTrace> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(hop_trace_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hopqa
