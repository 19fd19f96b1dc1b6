#pragma once

// Contracts between the pipeline and its three learned components. Trained
// models implement these; tests substitute scripted versions.

#include "hopqa/corpus.hpp"

#include <array>
#include <cstddef>
#include <string>

namespace hopqa {

struct SpanPrediction {
  std::string text;       // empty iff is_null
  std::size_t start = 0;  // byte offsets into the premise paragraph_text
  std::size_t end = 0;
  double confidence = 0.0;
  bool is_null = true;
};

enum class Label { kIrrel = 0, kIntermediate = 1, kFinal = 2 };

const char* label_name(Label l);
Label label_from_name(const std::string& name);

struct Verdict {
  Label label = Label::kIrrel;
  std::array<double, 3> probs{1.0, 0.0, 0.0};
};

// Argmax over scores with ties resolved Irrel < Intermediate < Final; probs
// are the softmax of the scores.
Verdict verdict_from_scores(const std::array<double, 3>& scores);
Verdict verdict_from_probs(const std::array<double, 3>& probs);

class SingleHopReader {
 public:
  virtual ~SingleHopReader() = default;
  virtual SpanPrediction extract(const std::string& question, const Premise& premise) const = 0;
  virtual bool frozen() const { return true; }
};

class PremiseClassifier {
 public:
  virtual ~PremiseClassifier() = default;
  virtual Verdict classify(const std::string& question, const Premise& premise) const = 0;
};

class FollowupWriter {
 public:
  virtual ~FollowupWriter() = default;
  virtual std::string generate(const std::string& q1, const Premise& p1) const = 0;
};

}  // namespace hopqa
