// Runs the hopqa executable as a subprocess.

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hopqa {
namespace {

using testing::TempDir;

struct RunResult {
  int status = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  RunResult r;
  const std::string cmd = std::string(HOPQA_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.out += buf;
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("no-such-stage").status, 2);
  EXPECT_EQ(run("prepare --no-such-flag").status, 2);
  EXPECT_EQ(run("--set beam_size=0 eval-full --examples x").status, 2);
  EXPECT_EQ(run("--set unknown_key=1 eval-full --examples x").status, 2);
  EXPECT_EQ(run("eval-full --examples x --hops 3").status, 2);
}

TEST(Cli, MissingArtifactsExitWithOneAndNameThePath) {
  const RunResult r = run("prepare --hotpotqa /nonexistent/train.json --out /tmp/unused.jsonl");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("/nonexistent/train.json"), std::string::npos) << r.out;
  const RunResult c = run("--config /nonexistent/run.conf train-controller");
  EXPECT_EQ(c.status, 1);
  EXPECT_NE(c.out.find("/nonexistent/run.conf"), std::string::npos) << c.out;
}

TEST(Cli, StageOrderViolationFailsFast) {
  TempDir dir("cli-order");
  ASSERT_EQ(run("synth --out-dir " + dir.str() + " --questions 4").status, 0);
  ASSERT_EQ(run("prepare --hotpotqa " + dir.file("hotpotqa.json") + " --out " + dir.file("bridge.jsonl")).status, 0);
  const RunResult r =
      run("--set checkpoint_dir=" + dir.file("ckpt") + " weak-label --examples " + dir.file("bridge.jsonl"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find(dir.file("ckpt")), std::string::npos) << r.out;
}

// Every stage on a tiny synthetic corpus, twice, into separate directories.
TEST(Cli, StagesRunEndToEndAndRerunsAreByteIdentical) {
  TempDir dir("cli-e2e");
  const std::string data = dir.file("data");
  ASSERT_EQ(run("synth --out-dir " + data + " --questions 12").status, 0);
  const RunResult prep = run("prepare --hotpotqa " + data + "/hotpotqa.json --out " + data + "/bridge.jsonl");
  ASSERT_EQ(prep.status, 0) << prep.out;
  EXPECT_NE(prep.out.find("kept 12"), std::string::npos) << prep.out;

  auto pass = [&](const std::string& tag) {
    const std::string sets = "-q --set checkpoint_dir=" + dir.file(tag + "/ckpt") + " --set output_dir=" +
                             dir.file(tag + "/out") +
                             " --set extractor_epochs=30 --set qg_epochs=10 --set followup_epochs=10"
                             " --set controller_epochs=2 --set embedding_dim=8 --set hidden_dim=8"
                             " --set attention_dim=8 --set align_dim=8 --set mlp_dim=8 ";
    const std::string ex = " --examples " + data + "/bridge.jsonl";
    const std::vector<std::string> stages = {
        "train-extractor --squad " + data + "/squad.json",
        "train-qg --squad " + data + "/squad.json",
        "weak-label" + ex,
        "train-followup" + ex,
        "build-controller-data" + ex,
        "train-controller",
        "eval-oracle --variant q1_else_q2" + ex + " --predictions " + dir.file(tag + "/out/oracle.json"),
        "eval-full --hops 2" + ex + " --traces " + dir.file(tag + "/out/traces.jsonl") + " --predictions " +
            dir.file(tag + "/out/full.json"),
        "generate-followups" + ex,
        "followup-quality" + ex,
    };
    std::string log;
    for (const auto& s : stages) {
      const RunResult r = run(sets + s);
      EXPECT_EQ(r.status, 0) << s << "\n" << r.out;
      log += r.out;
    }
    return log;
  };
  const std::string first = pass("a");
  const std::string second = pass("b");

  EXPECT_NE(first.find("q1_else_q2"), std::string::npos);
  EXPECT_NE(first.find("requests:"), std::string::npos);
  EXPECT_NE(first.find("followup-quality:"), std::string::npos);

  for (const char* f : {"out/weak_labels.jsonl", "out/controller_triples.jsonl", "out/oracle.json", "out/full.json",
                        "out/traces.jsonl", "out/followups.jsonl", "ckpt/extractor/params.bin",
                        "ckpt/followup/params.bin", "ckpt/controller/manifest.txt"}) {
    const std::string a = slurp(dir.file(std::string("a/") + f)), b = slurp(dir.file(std::string("b/") + f));
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, b) << f;
  }
  const std::string manifest = slurp(dir.file("a/ckpt/followup/manifest.txt"));
  EXPECT_NE(manifest.find("steps = "), std::string::npos) << manifest;
  EXPECT_NE(manifest.find("config_hash = "), std::string::npos) << manifest;
  EXPECT_NE(manifest.find("vocab_fingerprint = "), std::string::npos) << manifest;
}

}  // namespace
}  // namespace hopqa
