#pragma once

#include "hopqa/corpus.hpp"
#include "hopqa/interfaces.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace hopqa {

int exact_match(const std::string& prediction, const std::string& gold);
double f1(const std::string& prediction, const std::string& gold);

struct EvalReport {
  std::string variant;
  double em = 0.0;  // percentages
  double f1 = 0.0;
  std::size_t count = 0;
};

// Missing ids score as the empty answer.
EvalReport evaluate(const std::map<std::string, std::string>& predictions, const std::vector<BridgeExample>& examples,
                    const std::string& variant);

struct DesiderataReport {
  double answerability = 0.0;         // f1(extract(Q2, P2), A) > 0
  double answerability_strict = 0.0;  // exact match
  double recognition = 0.0;           // classify(Q2, P2) == Final
  double rejection = 0.0;             // classify(Q2, P) == Irrel over non-gold P
  std::size_t count = 0;
};

// Throws std::invalid_argument on an empty example list.
DesiderataReport followup_quality(const std::vector<BridgeExample>& examples,
                                  const std::map<std::string, std::string>& followups,
                                  const SingleHopReader& extractor, const PremiseClassifier& controller);

// Table layout: one row per report under a "variant  EM  F1" header.
void write_report_table(std::ostream& out, const std::vector<EvalReport>& reports);
void write_report_json(std::ostream& out, const std::vector<EvalReport>& reports);

}  // namespace hopqa
