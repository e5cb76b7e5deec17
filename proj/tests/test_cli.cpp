// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "asn/cli.hpp"
#include "asn/config.hpp"

using namespace asn;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("asn_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream cfg(dir_ / "small.ini");
    cfg << "[dataio]\n"
           "tasks = stack,color_push\n"
           "demos_per_task = 2\n"
           "frames_per_demo = 16\n"
           "image_size = 32\n"
           "validation_demos_per_task = 1\n"
           "test_demos_per_task = 2\n"
           "stride = 4\n"
           "skill_batch = 4\n"
           "view_pairs = 2\n"
           "batch_frames = 16\n"
           "[encoder]\n"
           "input_size = 32\n"
           "[trainer]\n"
           "steps = 2\n"
           "checkpoint_every = 0\n";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string cfg() const { return (dir_ / "small.ini").string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, TrainThenEvaluate) {
  const auto data = (dir_ / "data").string();
  auto r = run({"synth-data", "--config", cfg(), "--out", data});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::is_directory(fs::path(data) / "test" / "color_stack"));

  r = run({"train", "--config", cfg(), "--data", data, "--out", (dir_ / "train").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ckpt = dir_ / "train" / "checkpoint.pt";
  ASSERT_TRUE(fs::exists(ckpt));
  EXPECT_TRUE(fs::exists(dir_ / "train" / "metrics.jsonl"));
  EXPECT_TRUE(fs::exists(dir_ / "train" / "config.ini"));

  r = run({"eval-align", "--config", cfg(), "--checkpoint", ckpt.string(), "--data", data, "--tasks", "color_stack",
           "--out", (dir_ / "eval").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("alignment"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "eval" / "alignment.jsonl"));
  EXPECT_TRUE(fs::exists(dir_ / "eval" / "summary.txt"));

  fs::path demo_dir;
  for (const auto& e : fs::directory_iterator(fs::path(data) / "test" / "color_stack")) demo_dir = e.path();
  r = run({"plot-tsne", "--config", cfg(), "--checkpoint", ckpt.string(), "--demo", demo_dir.string(), "--out",
           (dir_ / "tsne").string(), "evaluation.tsne_iterations=100"});
  ASSERT_EQ(r.status, 0) << r.err;
  r = run({"plot-reward", "--config", cfg(), "--checkpoint", ckpt.string(), "--demo", demo_dir.string(), "--out",
           (dir_ / "reward").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  r = run({"rl-train", "--config", cfg(), "--checkpoint", ckpt.string(), "--demo", demo_dir.string(), "--env", "toy",
           "--out", (dir_ / "rl").string(), "--set", "rl.iterations=2", "--set", "rl.episodes_per_iteration=2"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "rl" / "learning_curve.jsonl"));
  EXPECT_TRUE(fs::exists(dir_ / "rl" / "policy.pt"));
}

TEST_F(CliTest, OverrideIsFrozen) {
  const auto out = dir_ / "synth";
  auto r = run({"synth-data", "--config", cfg(), "--out", out.string(), "losses.alpha=0"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto frozen = load_config(out / "config.ini");
  EXPECT_EQ(frozen.losses.alpha, 0.0);
  EXPECT_EQ(get_value(frozen, "losses.alpha"), get_value(parse_config("[losses]\nalpha = 0\n"), "losses.alpha"));
}

TEST_F(CliTest, UnknownKeyExitsWithTwo) {
  auto r = run({"synth-data", "--config", cfg(), "--out", (dir_ / "x").string(), "losses.alpah=0"});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("losses.alpah"), std::string::npos);
  r = run({"synth-data", "--config", cfg(), "--out", (dir_ / "x").string(), "--set", "trainer.learning_rate=-1"});
  EXPECT_EQ(r.status, 2);
}

TEST_F(CliTest, MissingInputsExitWithThree) {
  auto r = run({"eval-align", "--checkpoint", (dir_ / "none.pt").string(), "--data", (dir_ / "nodata").string(),
                "--out", (dir_ / "e").string()});
  EXPECT_EQ(r.status, 3);
  r = run({"train", "--data", (dir_ / "nodata").string(), "--out", (dir_ / "t").string()});
  EXPECT_EQ(r.status, 3);
  r = run({"train", "--config", (dir_ / "missing.ini").string(), "--data", "x", "--out", (dir_ / "t").string()});
  EXPECT_EQ(r.status, 3);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_NE(run({"no-such-command"}).status, 0);
  EXPECT_NE(run({"train"}).status, 0);
  EXPECT_EQ(run({"--help"}).status, 0);
}
