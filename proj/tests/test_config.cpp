#include "hopqa/config.hpp"
#include "hopqa/error.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hopqa {
namespace {

using testing::TempDir;

std::map<std::string, std::string> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config_text(in);
}

TEST(RunConfig, DefaultsAreValidAndSeedIsThirteen) {
  const RunConfig c = load_run_config({}, {}, false);
  EXPECT_EQ(c.seed, 13u);
  EXPECT_EQ(c.profile, "desk");
  EXPECT_EQ(c.beam_size, 4);
  EXPECT_EQ(c.max_hops, 2);
  EXPECT_DOUBLE_EQ(c.null_threshold, 0.0);
  EXPECT_NO_THROW(c.validate());
}

TEST(ParseConfigText, CommentsBlankLinesAndWhitespace) {
  const auto m = parse("# header\n\n beam_size = 6  # wider\nseed=21\n");
  EXPECT_EQ(m.at("beam_size"), "6");
  EXPECT_EQ(m.at("seed"), "21");
  EXPECT_EQ(m.size(), 2u);
}

TEST(ParseConfigText, RejectsUnknownKeysAndMalformedLines) {
  EXPECT_THROW(parse("bogus_key = 1\n"), ConfigError);
  EXPECT_THROW(parse("beam_size 4\n"), ConfigError);
}

TEST(LoadRunConfig, InvalidValues) {
  EXPECT_THROW(load_run_config({{"beam_size", "0"}}, {}, false), ConfigError);
  EXPECT_THROW(load_run_config({{"beam_size", "four"}}, {}, false), ConfigError);
  EXPECT_THROW(load_run_config({{"learning_rate", "-1"}}, {}, false), ConfigError);
  EXPECT_THROW(load_run_config({{"max_hops", "3"}}, {}, false), ConfigError);
  EXPECT_THROW(load_run_config({{"dev_fraction", "1"}}, {}, false), ConfigError);
  EXPECT_THROW(load_run_config({{"coverage", "maybe"}}, {}, false), ConfigError);
  EXPECT_THROW(load_run_config({{"profile", "huge"}}, {}, false), ConfigError);
  EXPECT_NO_THROW(load_run_config({{"null_threshold", "-2.5"}}, {}, false));
}

TEST(LoadRunConfig, PrecedenceProfileFileEnvOverride) {
  const RunConfig full = load_run_config({{"profile", "full"}}, {}, false);
  EXPECT_GT(full.hidden_dim, RunConfig{}.hidden_dim);
  const RunConfig file_wins = load_run_config({{"profile", "full"}, {"hidden_dim", "20"}}, {}, false);
  EXPECT_EQ(file_wins.hidden_dim, 20);
  const RunConfig override_wins = load_run_config({{"hidden_dim", "20"}}, {{"hidden_dim", "24"}}, false);
  EXPECT_EQ(override_wins.hidden_dim, 24);

  ::setenv(kCheckpointRootEnv, "/env/ckpt", 1);
  EXPECT_EQ(load_run_config({{"checkpoint_dir", "file/ckpt"}}, {}, true).checkpoint_dir, "/env/ckpt");
  EXPECT_EQ(load_run_config({}, {{"checkpoint_dir", "cli/ckpt"}}, true).checkpoint_dir, "cli/ckpt");
  EXPECT_EQ(load_run_config({{"checkpoint_dir", "file/ckpt"}}, {}, false).checkpoint_dir, "file/ckpt");
  ::unsetenv(kCheckpointRootEnv);
}

TEST(RunConfig, HashTracksModelKeysOnly) {
  const RunConfig base = load_run_config({}, {}, false);
  EXPECT_EQ(base.hash().size(), 16u);
  EXPECT_EQ(base.hash(), load_run_config({}, {}, false).hash());
  EXPECT_EQ(base.hash(), load_run_config({{"output_dir", "elsewhere"}}, {}, false).hash());
  EXPECT_NE(base.hash(), load_run_config({{"hidden_dim", "49"}}, {}, false).hash());
  EXPECT_NE(base.hash(), load_run_config({{"seed", "14"}}, {}, false).hash());
}

TEST(RunConfig, TextRoundTrip) {
  const RunConfig c = load_run_config({{"beam_size", "3"}, {"coverage", "true"}, {"null_threshold", "0.25"}}, {}, false);
  const RunConfig back = load_run_config(parse(c.to_text()), {}, false);
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.hash(), c.hash());
  const std::string text = c.to_text();
  EXPECT_EQ(config_keys().size(), static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));
}

TEST(RunConfig, StageConfigsCarryTheSharedSettings) {
  const RunConfig c = load_run_config({{"beam_size", "2"}, {"qg_epochs", "7"}, {"null_threshold", "0.5"}}, {}, false);
  EXPECT_EQ(c.qg_config().beam_size, 2);
  EXPECT_EQ(c.followup_config().beam_size, 2);
  EXPECT_EQ(c.qg_config().train.epochs, 7);
  EXPECT_EQ(c.followup_config().train.epochs, c.followup_epochs);
  EXPECT_DOUBLE_EQ(c.extractor_config().null_threshold, 0.5);
  EXPECT_EQ(c.controller_config().train.seed, 13u);
  EXPECT_EQ(c.pipeline_config().max_hops, 2);
}

TEST(LoadRunConfigFile, MissingFileAndRepositoryConfig) {
  EXPECT_THROW(load_run_config_file("/nonexistent/run.conf", {}, false), MissingArtifactError);
  TempDir dir("config");
  std::ofstream(dir.file("run.conf")) << "profile = desk\nbeam_size = 5\n";
  EXPECT_EQ(load_run_config_file(dir.file("run.conf"), {}, false).beam_size, 5);
#ifdef HOPQA_SOURCE_DIR
  EXPECT_NO_THROW(load_run_config_file(std::string(HOPQA_SOURCE_DIR) + "/configs/synthetic.conf", {}, false));
#endif
}

}  // namespace
}  // namespace hopqa
