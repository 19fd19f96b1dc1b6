#pragma once

// Runs the question-answering loop: the oracle settings that route the gold
// premises directly, and the full controller-driven two-hop loop. Every run
// records a HopTrace from which the answer can be recomputed.

#include "hopqa/corpus.hpp"
#include "hopqa/interfaces.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hopqa {

enum class OracleVariant { kTrainedQ2, kQ2EqualsQ1, kQ1ElseQ2 };

const char* variant_name(OracleVariant v);
// Throws ConfigError for unknown names.
OracleVariant variant_from_name(const std::string& name);

struct VerdictRecord {
  int hop = 1;
  std::string question;
  std::string premise_title;
  std::size_t premise_index = 0;  // position among the example's premises
  Verdict verdict;
  std::string action;  // "extract", "followup" or "none"
};

struct FollowupRecord {
  int hop = 1;
  std::string source_question;
  std::string premise_title;
  std::size_t premise_index = 0;
  std::string followup;
};

struct ExtractionRecord {
  int hop = 1;
  std::string question;
  std::string premise_title;
  std::size_t premise_index = 0;
  SpanPrediction prediction;
};

struct HopTrace {
  std::string example_id;
  std::string mode;  // oracle variant name or "full"
  int hops = 0;
  std::vector<VerdictRecord> verdicts;
  std::vector<FollowupRecord> followups;
  std::vector<ExtractionRecord> extractions;
  std::optional<std::size_t> chosen;  // index into extractions
  std::string answer;
};

struct PredictedAnswer {
  std::string example_id;
  std::string answer;
  double confidence = 0.0;
  HopTrace trace;
};

struct Models {
  const SingleHopReader* extractor = nullptr;
  const FollowupWriter* followup = nullptr;
  const PremiseClassifier* controller = nullptr;  // only the full loop needs it
};

struct PipelineConfig {
  int max_hops = 2;
};

// Non-null extraction of highest confidence; ties keep the earliest entry.
std::optional<std::size_t> select_best(const std::vector<ExtractionRecord>& extractions);

PredictedAnswer run_oracle(const BridgeExample& example, OracleVariant variant, const Models& models);
PredictedAnswer run_full(const BridgeExample& example, const Models& models, const PipelineConfig& cfg = {});

struct RunCounters {
  std::size_t followups = 0;
  std::size_t hop1_extractions = 0;
  std::size_t hop2_extractions = 0;
};
RunCounters count_requests(const std::vector<PredictedAnswer>& answers);

// Re-issues every recorded extraction call against the extractor, checks the
// recorded predictions and re-applies answer selection. Returns the replayed
// answer, or nullopt when any recorded call no longer reproduces.
std::optional<std::string> replay_trace(const HopTrace& trace, const BridgeExample& example,
                                        const SingleHopReader& extractor);

nlohmann::json to_json(const HopTrace& trace);
HopTrace hop_trace_from_json(const nlohmann::json& j);

// Predictions: one JSON object mapping id -> {"answer", "confidence"}.
void write_predictions(std::ostream& out, const std::vector<PredictedAnswer>& answers);
// Traces: one HopTrace per line.
void write_traces(std::ostream& out, const std::vector<PredictedAnswer>& answers);
std::vector<HopTrace> read_traces(std::istream& in);

}  // namespace hopqa
