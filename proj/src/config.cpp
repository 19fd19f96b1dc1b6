#include "hopqa/config.hpp"

#include "hopqa/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace hopqa {

namespace {

struct Field {
  const char* key;
  bool affects_model;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError("invalid value for " + key + ": '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + text + "'");
}

std::string fmt_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

#define HOPQA_STR(name, model)                                                  \
  Field {                                                                       \
    #name, model, [](const RunConfig& c) { return c.name; },                    \
        [](RunConfig& c, const std::string& v) { c.name = v; }                  \
  }
#define HOPQA_NUM(name, type)                                                   \
  Field {                                                                       \
    #name, true, [](const RunConfig& c) { return std::to_string(c.name); },     \
        [](RunConfig& c, const std::string& v) { c.name = parse_number<type>(#name, v); } \
  }
#define HOPQA_REAL(name)                                                        \
  Field {                                                                       \
    #name, true, [](const RunConfig& c) { return fmt_double(c.name); },         \
        [](RunConfig& c, const std::string& v) { c.name = parse_number<double>(#name, v); } \
  }
#define HOPQA_BOOL(name)                                                        \
  Field {                                                                       \
    #name, true, [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.name = parse_bool(#name, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      HOPQA_STR(profile, true),
      HOPQA_STR(data_dir, false),
      HOPQA_STR(checkpoint_dir, false),
      HOPQA_STR(output_dir, false),
      HOPQA_STR(extractor_backend, true),
      HOPQA_STR(controller_backend, true),
      HOPQA_NUM(vocab_size, int),
      HOPQA_NUM(embedding_dim, int),
      HOPQA_NUM(hidden_dim, int),
      HOPQA_NUM(attention_dim, int),
      HOPQA_NUM(align_dim, int),
      HOPQA_NUM(feature_dim, int),
      HOPQA_NUM(mlp_dim, int),
      HOPQA_NUM(beam_size, int),
      HOPQA_NUM(max_source_len, int),
      HOPQA_NUM(max_target_len, int),
      HOPQA_NUM(max_hops, int),
      HOPQA_REAL(null_threshold),
      HOPQA_REAL(learning_rate),
      HOPQA_NUM(batch_size, int),
      HOPQA_NUM(max_steps, long),
      HOPQA_NUM(extractor_epochs, int),
      HOPQA_NUM(qg_epochs, int),
      HOPQA_NUM(followup_epochs, int),
      HOPQA_NUM(controller_epochs, int),
      HOPQA_REAL(dev_fraction),
      HOPQA_REAL(clip_norm),
      HOPQA_NUM(seed, std::uint64_t),
      HOPQA_BOOL(class_weighting),
      HOPQA_REAL(irrel_keep_fraction),
      HOPQA_BOOL(coverage),
      HOPQA_REAL(coverage_weight),
  };
  return kFields;
}

#undef HOPQA_STR
#undef HOPQA_NUM
#undef HOPQA_REAL
#undef HOPQA_BOOL

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

void RunConfig::validate() const {
  if (profile != "desk" && profile != "full") throw ConfigError("profile must be desk or full");
  const std::pair<const char*, double> positive[] = {
      {"vocab_size", vocab_size},         {"embedding_dim", embedding_dim},
      {"hidden_dim", hidden_dim},         {"attention_dim", attention_dim},
      {"align_dim", align_dim},           {"feature_dim", feature_dim},
      {"mlp_dim", mlp_dim},               {"beam_size", beam_size},
      {"max_source_len", max_source_len}, {"max_target_len", max_target_len},
      {"max_hops", max_hops},             {"learning_rate", learning_rate},
      {"batch_size", batch_size},         {"max_steps", static_cast<double>(max_steps)},
      {"extractor_epochs", extractor_epochs}, {"qg_epochs", qg_epochs},
      {"followup_epochs", followup_epochs},   {"controller_epochs", controller_epochs},
      {"clip_norm", clip_norm},           {"seed", static_cast<double>(seed)},
      {"irrel_keep_fraction", irrel_keep_fraction},
  };
  for (const auto& [name, v] : positive) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  }
  if (max_hops > 2) throw ConfigError("max_hops must be 1 or 2");
  if (irrel_keep_fraction > 1.0) throw ConfigError("irrel_keep_fraction must not exceed 1");
  if (!std::isfinite(null_threshold)) throw ConfigError("null_threshold must be finite");
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) throw ConfigError("dev_fraction must be in [0, 1)");
  if (!(coverage_weight >= 0.0)) throw ConfigError("coverage_weight must be non-negative");
  if (vocab_size <= Vocab::kNumReserved) throw ConfigError("vocab_size must exceed the reserved block");
}

std::string RunConfig::to_text() const {
  std::map<std::string, std::string> sorted;
  for (const auto& f : fields()) sorted[f.key] = f.get(*this);
  std::string out;
  for (const auto& [k, v] : sorted) out += k + " = " + v + "\n";
  return out;
}

std::string RunConfig::hash() const {
  std::map<std::string, std::string> sorted;
  for (const auto& f : fields()) {
    if (f.affects_model) sorted[f.key] = f.get(*this);
  }
  std::string canon;
  for (const auto& [k, v] : sorted) canon += k + "=" + v + "\n";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
  return buf;
}

TrainOptions RunConfig::train_options(int epochs) const {
  TrainOptions t;
  t.epochs = epochs;
  t.max_steps = max_steps;
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.clip_norm = clip_norm;
  t.dev_fraction = dev_fraction;
  t.seed = seed;
  return t;
}

ExtractorConfig RunConfig::extractor_config() const {
  ExtractorConfig c;
  c.backend = extractor_backend;
  c.vocab_size = vocab_size;
  c.embedding_dim = embedding_dim;
  c.hidden_dim = hidden_dim;
  c.align_dim = align_dim;
  c.null_threshold = null_threshold;
  c.train = train_options(extractor_epochs);
  return c;
}

QGConfig RunConfig::qg_config() const {
  QGConfig c;
  c.vocab_size = vocab_size;
  c.embedding_dim = embedding_dim;
  c.hidden_dim = hidden_dim;
  c.attention_dim = attention_dim;
  c.feature_dim = feature_dim;
  c.coverage = coverage;
  c.max_source_len = max_source_len;
  c.max_target_len = max_target_len;
  c.beam_size = beam_size;
  c.train = train_options(qg_epochs);
  return c;
}

FollowupConfig RunConfig::followup_config() const {
  FollowupConfig c;
  c.vocab_size = vocab_size;
  c.embedding_dim = embedding_dim;
  c.hidden_dim = hidden_dim;
  c.attention_dim = attention_dim;
  c.feature_dim = feature_dim;
  c.coverage = coverage;
  c.coverage_weight = coverage_weight;
  c.max_source_len = max_source_len;
  c.max_target_len = max_target_len;
  c.beam_size = beam_size;
  c.train = train_options(followup_epochs);
  return c;
}

ControllerConfig RunConfig::controller_config() const {
  ControllerConfig c;
  c.backend = controller_backend;
  c.vocab_size = vocab_size;
  c.embedding_dim = embedding_dim;
  c.hidden_dim = hidden_dim;
  c.align_dim = align_dim;
  c.mlp_dim = mlp_dim;
  c.class_weighting = class_weighting;
  c.irrel_keep_fraction = irrel_keep_fraction;
  c.train = train_options(controller_epochs);
  return c;
}

PipelineConfig RunConfig::pipeline_config() const { return PipelineConfig{max_hops}; }

RunConfig RunConfig::for_profile(const std::string& profile) {
  RunConfig c;
  c.profile = profile;
  if (profile == "full") {
    c.vocab_size = 50000;
    c.embedding_dim = 128;
    c.hidden_dim = 256;
    c.attention_dim = 256;
    c.align_dim = 128;
    c.feature_dim = 16;
    c.mlp_dim = 128;
    c.batch_size = 32;
    c.learning_rate = 0.001;
    c.extractor_epochs = 3;
    c.qg_epochs = 5;
    c.followup_epochs = 5;
    c.controller_epochs = 2;
  } else if (profile != "desk") {
    throw ConfigError("unknown profile '" + profile + "' (expected desk or full)");
  }
  return c;
}

std::map<std::string, std::string> parse_config_text(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    field(key);  // rejects unknown keys
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig load_run_config(const std::map<std::string, std::string>& file_entries,
                          const std::map<std::string, std::string>& overrides, bool use_env) {
  std::map<std::string, std::string> merged = file_entries;
  if (use_env) {
    if (const char* root = std::getenv(kCheckpointRootEnv); root != nullptr && *root != '\0') {
      merged["checkpoint_dir"] = root;
    }
  }
  for (const auto& [k, v] : overrides) merged[k] = v;
  for (const auto& [k, v] : merged) field(k);

  auto it = merged.find("profile");
  RunConfig cfg = RunConfig::for_profile(it == merged.end() ? "desk" : it->second);
  for (const auto& [k, v] : merged) field(k).set(cfg, v);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config_file(const std::string& path, const std::map<std::string, std::string>& overrides,
                               bool use_env) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(path);
  return load_run_config(parse_config_text(in), overrides, use_env);
}

}  // namespace hopqa
