#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hopqa {

struct Premise {
  std::string title;
  std::vector<std::string> sentences;
  std::string paragraph_text;  // sentences concatenated in order

  static Premise from_sentences(std::string title, std::vector<std::string> sentences);
  bool operator==(const Premise& o) const { return title == o.title && sentences == o.sentences; }
};

enum class QuestionType { kBridge, kComparison };

struct QuestionRecord {
  std::string id;
  std::string question;
  std::string answer;
  QuestionType qtype = QuestionType::kBridge;
  std::vector<Premise> premises;
  std::vector<std::string> supporting_titles;  // distinct, in first-label order
};

struct BridgeExample {
  std::string id;
  std::string q1;
  std::string answer;
  Premise p1_hat;  // intermediate
  Premise p2_hat;  // answer-bearing
  std::vector<Premise> distractors;
  // Positions of the gold premises in the source record; distractors fill the
  // remaining positions in order.
  std::size_t p1_position = 0;
  std::size_t p2_position = 1;

  // All premises in source-record order.
  std::vector<Premise> premises() const;
};

struct SquadExample {
  std::string id;
  std::string question;
  std::string context;
  std::string answer_text;          // empty iff is_impossible
  std::ptrdiff_t answer_start = -1; // byte offset into context, -1 iff is_impossible
  bool is_impossible = false;
};

// HotpotQA distractor-setting JSON (top-level array).
std::vector<QuestionRecord> load_hotpotqa(const std::string& path);
std::vector<QuestionRecord> parse_hotpotqa(const nlohmann::json& root);

bool answer_in_premise(const std::string& answer, const Premise& premise);

struct FilterStats {
  std::size_t kept = 0;
  std::size_t dropped_comparison = 0;
  std::size_t dropped_support_count = 0;   // not exactly two supporting premises
  std::size_t dropped_missing_title = 0;   // supporting title absent from context
  std::size_t dropped_answer_location = 0; // answer in zero or both supporting premises

  std::size_t dropped() const {
    return dropped_comparison + dropped_support_count + dropped_missing_title + dropped_answer_location;
  }
};

std::vector<BridgeExample> filter_two_hop_bridge(const std::vector<QuestionRecord>& records,
                                                 FilterStats* stats = nullptr);

// SQuAD v2.0 JSON. answer_start values in the file are code-point offsets and
// are converted to byte offsets.
std::vector<SquadExample> load_squad(const std::string& path);
std::vector<SquadExample> parse_squad(const nlohmann::json& root);

// Line-delimited BridgeExample records (one JSON object per line).
nlohmann::json to_json(const Premise& p);
Premise premise_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BridgeExample& ex);
BridgeExample bridge_example_from_json(const nlohmann::json& j);
void write_bridge_examples(std::ostream& out, const std::vector<BridgeExample>& examples);
std::vector<BridgeExample> read_bridge_examples(std::istream& in);
std::vector<BridgeExample> read_bridge_examples(const std::string& path);

}  // namespace hopqa
