#include "hopqa/interfaces.hpp"

#include "hopqa/error.hpp"

#include <algorithm>
#include <cmath>

namespace hopqa {

const char* label_name(Label l) {
  switch (l) {
    case Label::kIrrel:
      return "Irrel";
    case Label::kIntermediate:
      return "Intermediate";
    case Label::kFinal:
      return "Final";
  }
  return "?";
}

Label label_from_name(const std::string& name) {
  if (name == "Irrel") return Label::kIrrel;
  if (name == "Intermediate") return Label::kIntermediate;
  if (name == "Final") return Label::kFinal;
  throw ParseError("unknown controller label '" + name + "'");
}

Verdict verdict_from_scores(const std::array<double, 3>& scores) {
  Verdict v;
  int best = 0;
  for (int k = 1; k < 3; ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  v.label = static_cast<Label>(best);
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (int k = 0; k < 3; ++k) {
    v.probs[k] = std::exp(scores[k] - mx);
    z += v.probs[k];
  }
  for (double& p : v.probs) p /= z;
  return v;
}

Verdict verdict_from_probs(const std::array<double, 3>& probs) {
  Verdict v;
  v.probs = probs;
  int best = 0;
  for (int k = 1; k < 3; ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  v.label = static_cast<Label>(best);
  return v;
}

}  // namespace hopqa
