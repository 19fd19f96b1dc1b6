#include "hopqa/metrics.hpp"

#include "hopqa/textproc.hpp"

#include <nlohmann/json.hpp>

#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace hopqa {

int exact_match(const std::string& prediction, const std::string& gold) {
  return normalize_answer(prediction) == normalize_answer(gold) ? 1 : 0;
}

double f1(const std::string& prediction, const std::string& gold) {
  const auto p = normalized_tokens(prediction);
  const auto g = normalized_tokens(gold);
  if (p.empty() || g.empty()) return p.empty() && g.empty() ? 1.0 : 0.0;
  std::unordered_map<std::string, int> gold_counts;
  for (const auto& t : g) ++gold_counts[t];
  int same = 0;
  for (const auto& t : p) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++same;
    }
  }
  if (same == 0) return 0.0;
  const double precision = static_cast<double>(same) / static_cast<double>(p.size());
  const double recall = static_cast<double>(same) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

EvalReport evaluate(const std::map<std::string, std::string>& predictions, const std::vector<BridgeExample>& examples,
                    const std::string& variant) {
  EvalReport r;
  r.variant = variant;
  for (const auto& ex : examples) {
    auto it = predictions.find(ex.id);
    const std::string pred = it == predictions.end() ? std::string() : it->second;
    r.em += exact_match(pred, ex.answer);
    r.f1 += f1(pred, ex.answer);
    ++r.count;
  }
  if (r.count > 0) {
    r.em *= 100.0 / static_cast<double>(r.count);
    r.f1 *= 100.0 / static_cast<double>(r.count);
  }
  return r;
}

DesiderataReport followup_quality(const std::vector<BridgeExample>& examples,
                                  const std::map<std::string, std::string>& followups,
                                  const SingleHopReader& extractor, const PremiseClassifier& controller) {
  if (examples.empty()) throw std::invalid_argument("followup_quality: no examples");
  DesiderataReport r;
  std::size_t non_gold = 0;
  double rejected = 0.0;
  for (const auto& ex : examples) {
    ++r.count;
    auto it = followups.find(ex.id);
    const auto premises = ex.premises();
    non_gold += premises.size() - 1;
    if (it == followups.end() || it->second.empty()) continue;
    const std::string& q2 = it->second;
    SpanPrediction pred = extractor.extract(q2, ex.p2_hat);
    if (f1(pred.text, ex.answer) > 0.0) r.answerability += 1.0;
    if (exact_match(pred.text, ex.answer) == 1) r.answerability_strict += 1.0;
    if (controller.classify(q2, ex.p2_hat).label == Label::kFinal) r.recognition += 1.0;
    for (std::size_t i = 0; i < premises.size(); ++i) {
      if (i == ex.p2_position) continue;
      if (controller.classify(q2, premises[i]).label == Label::kIrrel) rejected += 1.0;
    }
  }
  const auto n = static_cast<double>(r.count);
  r.answerability /= n;
  r.answerability_strict /= n;
  r.recognition /= n;
  r.rejection = non_gold > 0 ? rejected / static_cast<double>(non_gold) : 0.0;
  return r;
}

void write_report_table(std::ostream& out, const std::vector<EvalReport>& reports) {
  std::size_t width = 7;
  for (const auto& r : reports) width = std::max(width, r.variant.size());
  out << std::left << std::setw(static_cast<int>(width)) << "variant" << "  " << std::right << std::setw(6) << "EM"
      << "  " << std::setw(6) << "F1" << "  " << std::setw(6) << "n" << '\n';
  out << std::fixed << std::setprecision(1);
  for (const auto& r : reports) {
    out << std::left << std::setw(static_cast<int>(width)) << r.variant << "  " << std::right << std::setw(6) << r.em
        << "  " << std::setw(6) << r.f1 << "  " << std::setw(6) << r.count << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

void write_report_json(std::ostream& out, const std::vector<EvalReport>& reports) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) j.push_back({{"variant", r.variant}, {"em", r.em}, {"f1", r.f1}, {"count", r.count}});
  out << j.dump(2) << '\n';
}

}  // namespace hopqa
