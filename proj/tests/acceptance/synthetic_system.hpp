#pragma once

#include "hopqa/config.hpp"
#include "hopqa/controller.hpp"
#include "hopqa/corpus.hpp"
#include "hopqa/extractor.hpp"
#include "hopqa/followupgen.hpp"
#include "hopqa/qgweak.hpp"
#include "hopqa/synthetic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hopqa::acceptance {

// Everything the end-to-end criteria need, trained on the synthetic train
// partition and evaluated on both partitions.
struct SyntheticSystem {
  std::vector<BridgeExample> train;
  std::vector<BridgeExample> dev;
  std::optional<ExtractorModel> extractor;
  std::optional<QGModel> qg;
  std::optional<FollowupModel> followup;
  std::optional<ControllerModel> controller;
  std::vector<WeakFollowup> weak_labels;
  double train_seconds = 0.0;
};

SyntheticCorpus train_corpus();
SyntheticCorpus dev_corpus();

// Trains all four models and writes them under work_dir.
void train_and_save(const RunConfig& cfg, const std::string& work_dir);
// Loads what train_and_save wrote. Throws MissingArtifactError if absent.
SyntheticSystem load_system(const std::string& work_dir);

}  // namespace hopqa::acceptance
