#pragma once

// Templated micro-corpus of two-hop bridge questions over small entity
// tables. Writes the same file formats as the real data (HotpotQA-style
// question records and SQuAD-style single-hop questions), so every stage of
// the pipeline can run on it end to end.

#include "hopqa/corpus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hopqa {

struct SyntheticOptions {
  int num_questions = 200;        // bridge questions
  int num_comparison = 10;        // comparison records, dropped by the filter
  double easy_fraction = 0.3;     // first-hop questions that already name the bridge entity
  int num_distractors = 8;
  std::uint64_t seed = 13;
  // Entity combinations are drawn disjointly per partition, so two corpora
  // generated with different partitions never share subject or bridge entities.
  int partition = 0;
  int num_partitions = 2;
};

struct SyntheticCorpus {
  std::vector<QuestionRecord> records;  // bridge and comparison, HotpotQA-style
  std::vector<SquadExample> squad;      // single-hop questions over the same facts
  // Gold single-hop questions about each bridge example's answer-bearing premise.
  std::vector<std::pair<std::string, std::string>> gold_followups;  // (example id, question)
};

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& opts);

nlohmann::json hotpotqa_json(const std::vector<QuestionRecord>& records);
nlohmann::json squad_json(const std::vector<SquadExample>& examples);

}  // namespace hopqa
