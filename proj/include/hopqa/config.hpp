#pragma once

#include "hopqa/controller.hpp"
#include "hopqa/extractor.hpp"
#include "hopqa/followupgen.hpp"
#include "hopqa/pipeline.hpp"
#include "hopqa/qgweak.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace hopqa {

// Environment variable that overrides checkpoint_dir.
inline constexpr const char* kCheckpointRootEnv = "HOPQA_CHECKPOINT_ROOT";

struct RunConfig {
  std::string profile = "desk";  // desk | full
  std::string data_dir = "data";
  std::string checkpoint_dir = "checkpoints";
  std::string output_dir = "outputs";
  std::string extractor_backend = BiLstmPairEncoder::kBackendId;
  std::string controller_backend = BiLstmPairEncoder::kBackendId;

  int vocab_size = 20000;
  int embedding_dim = 32;
  int hidden_dim = 48;
  int attention_dim = 48;
  int align_dim = 32;
  int feature_dim = 8;
  int mlp_dim = 32;
  int beam_size = 4;
  int max_source_len = 400;
  int max_target_len = 32;
  int max_hops = 2;
  double null_threshold = 0.0;

  double learning_rate = 0.005;
  int batch_size = 8;
  long max_steps = 1000000;
  int extractor_epochs = 30;
  int qg_epochs = 30;
  int followup_epochs = 30;
  int controller_epochs = 10;
  double dev_fraction = 0.1;
  double clip_norm = 5.0;
  std::uint64_t seed = 13;

  bool class_weighting = true;
  double irrel_keep_fraction = 1.0;
  bool coverage = false;
  double coverage_weight = 1.0;

  // Numeric fields must be positive, with these exceptions: null_threshold may
  // be any finite value, dev_fraction lies in [0, 1), coverage_weight >= 0.
  void validate() const;

  // Sorted "key = value" lines for every key.
  std::string to_text() const;
  // FNV-1a of the model-affecting keys (paths excluded), as 16 hex digits.
  std::string hash() const;

  TrainOptions train_options(int epochs) const;
  ExtractorConfig extractor_config() const;
  QGConfig qg_config() const;
  FollowupConfig followup_config() const;
  ControllerConfig controller_config() const;
  PipelineConfig pipeline_config() const;

  static RunConfig for_profile(const std::string& profile);
};

std::vector<std::string> config_keys();

// Parses "key = value" lines; '#' starts a comment. Throws ConfigError on
// malformed lines and unknown keys.
std::map<std::string, std::string> parse_config_text(std::istream& in);

// defaults of the selected profile <- file entries <- checkpoint-root env var
// <- overrides. The profile key may come from either source.
RunConfig load_run_config(const std::map<std::string, std::string>& file_entries,
                          const std::map<std::string, std::string>& overrides, bool use_env = true);
RunConfig load_run_config_file(const std::string& path, const std::map<std::string, std::string>& overrides,
                               bool use_env = true);

}  // namespace hopqa
