// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "asn/checkpoint.hpp"
#include "asn/dataio/synthetic.hpp"
#include "asn/errors.hpp"
#include "asn/losses.hpp"
#include "asn/trainer.hpp"

using namespace asn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("asn_trainer_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.seed = 5;
  c.dataio.generator.image_size = 32;
  c.dataio.generator.frames_per_demo = 20;
  c.dataio.generator.demos_per_task = 6;
  c.dataio.skill.stride = 5;
  c.dataio.skill_batch = 8;
  c.encoder.input_size = 32;
  c.trainer.steps = 3;
  c.trainer.checkpoint_every = 0;
  return c;
}

const dataio::MultiTaskDataset& small_dataset() {
  static const auto ds = dataio::generate_synthetic_dataset(small_config().dataio.generator, 9);
  return ds;
}

std::vector<torch::Tensor> snapshot(torch::nn::Module& m) {
  std::vector<torch::Tensor> out;
  for (const auto& p : m.parameters()) out.push_back(p.detach().clone());
  return out;
}

bool same(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!torch::equal(a[i], b[i])) return false;
  }
  return true;
}

FitOptions into(const fs::path& dir) {
  FitOptions o;
  o.out_dir = dir;
  return o;
}

std::vector<torch::Tensor> checkpoint_encoder(const fs::path& path) {
  auto enc = load_encoder(path);
  return snapshot(*enc);
}

}  // namespace

TEST(Trainer, ParameterSetsAreDisjoint) {
  Trainer t(small_config());
  std::set<const void*> enc;
  for (const auto& p : t.encoder()->parameters()) enc.insert(p.data_ptr());
  for (const auto& p : t.discriminator()->parameters()) EXPECT_EQ(enc.count(p.data_ptr()), 0u);
}

TEST(Trainer, StepUpdatesBothNetworks) {
  Trainer t(small_config());
  const auto e0 = snapshot(*t.encoder()), d0 = snapshot(*t.discriminator());
  const auto m = t.step(small_dataset());
  EXPECT_EQ(m.step, 1);
  EXPECT_FALSE(same(e0, snapshot(*t.encoder())));
  EXPECT_FALSE(same(d0, snapshot(*t.discriminator())));
  EXPECT_TRUE(std::isfinite(m.lifted));
  EXPECT_NEAR(m.loss_d, -m.h_marg + m.h_cond + m.kl, 1e-5);
  EXPECT_GE(m.h_cond, 0.0);
  EXPECT_LE(m.h_marg, std::log(2.0) + 1e-6);
}

TEST(Trainer, ConstantEncoderObjectiveLeavesEncoderUntouched) {
  // The discriminator still trains, so any leak of L_D into the encoder would show.
  auto cfg = small_config();
  cfg.losses.alpha = 0.0;
  cfg.losses.encoder_entropy = false;
  Trainer t(cfg);
  const auto e0 = snapshot(*t.encoder()), d0 = snapshot(*t.discriminator());
  t.step(small_dataset());
  t.step(small_dataset());
  EXPECT_TRUE(same(e0, snapshot(*t.encoder())));
  EXPECT_FALSE(same(d0, snapshot(*t.discriminator())));
  for (const auto& p : t.encoder()->parameters()) {
    if (p.grad().defined()) {
      EXPECT_EQ(p.grad().abs().max().item<double>(), 0.0);
    }
  }
}

TEST(Trainer, ConstantDiscriminatorObjectiveLeavesDiscriminatorUntouched) {
  auto cfg = small_config();
  cfg.losses.beta = 0.0;
  cfg.losses.discriminator_entropy = false;
  Trainer t(cfg);
  const auto e0 = snapshot(*t.encoder()), d0 = snapshot(*t.discriminator());
  t.step(small_dataset());
  t.step(small_dataset());
  EXPECT_TRUE(same(d0, snapshot(*t.discriminator())));
  EXPECT_FALSE(same(e0, snapshot(*t.encoder())));
  for (const auto& p : t.discriminator()->parameters()) EXPECT_TRUE(p.requires_grad());
}

TEST(Trainer, MetricOnlyModeIgnoresDiscriminator) {
  auto cfg = small_config();
  cfg.trainer.adversarial = false;
  Trainer t(cfg);
  const auto d0 = snapshot(*t.discriminator());
  const auto m = t.step(small_dataset());
  EXPECT_TRUE(same(d0, snapshot(*t.discriminator())));
  EXPECT_NEAR(m.loss_e, -cfg.losses.alpha * m.lifted, 1e-6 * std::abs(m.lifted));
}

TEST(Trainer, IdenticalSeedsGiveIdenticalTraces) {
  // Runs are sequential: dropout and latent noise draw from the process-wide torch generator.
  auto run = [] {
    Trainer t(small_config());
    std::vector<TrainMetrics> trace;
    for (int i = 0; i < 3; ++i) trace.push_back(t.step(small_dataset()));
    return std::pair{trace, snapshot(*t.encoder())};
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_TRUE(same(a.second, b.second));
}

TEST(Trainer, NonFiniteLossAborts) {
  Trainer t(small_config());
  Rng rng = make_rng(1);
  const auto& cfg = t.config().dataio;
  auto batch = dataio::sample_metric_batch(small_dataset(), cfg.batch, rng, cfg.augment);
  auto tuples = dataio::sample_skill_pairs(small_dataset(), cfg.skill, cfg.skill_batch, true, rng);
  auto skills = dataio::skill_tensor(tuples, rng, cfg.augment);
  batch.images[0].fill_(std::numeric_limits<float>::quiet_NaN());
  try {
    t.train_step(batch, skills);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("non-finite"), std::string::npos);
    EXPECT_NE(what.find("metric_embeddings"), std::string::npos);
  }
}

TEST(Trainer, MetricsJsonRoundTrip) {
  TrainMetrics m{7, 1.0 / 3.0, 0.1, 0.69314718055994529, 1e-17, -0.2, 3.14159};
  EXPECT_EQ(metrics_from_json_line(to_json_line(m, 1.5)), m);
}

TEST(Fit, ZeroStepsWritesInitialWeights) {
  TempDir dir;
  auto cfg = small_config();
  cfg.trainer.steps = 0;
  const auto result = fit(cfg, small_dataset(), into(dir.path));
  EXPECT_TRUE(result.history.empty());
  Trainer fresh(cfg);
  EXPECT_TRUE(same(checkpoint_encoder(result.checkpoint), snapshot(*fresh.encoder())));
  EXPECT_EQ(read_checkpoint_info(result.checkpoint).step, 0);
  EXPECT_TRUE(fs::exists(dir.path / "config.ini"));
}

TEST(Fit, ResumeMatchesUninterruptedRun) {
  TempDir full_dir, part_dir;
  auto cfg = small_config();
  cfg.trainer.steps = 4;
  const auto full = fit(cfg, small_dataset(), into(full_dir.path));

  auto first = cfg;
  first.trainer.steps = 2;
  fit(first, small_dataset(), into(part_dir.path));
  FitOptions resume = into(part_dir.path);
  resume.resume = part_dir.path / "checkpoint.pt";
  const auto second = fit(cfg, small_dataset(), resume);

  ASSERT_EQ(second.history.size(), 2u);
  EXPECT_EQ(second.history[0], full.history[2]);
  EXPECT_EQ(second.history[1], full.history[3]);
  EXPECT_TRUE(same(checkpoint_encoder(full.checkpoint), checkpoint_encoder(second.checkpoint)));

  // The appended log replays to the uninterrupted trace.
  EXPECT_EQ(read_metrics_log(part_dir.path / "metrics.jsonl"), read_metrics_log(full_dir.path / "metrics.jsonl"));
}

TEST(Fit, LogReplayKeepsLatestRecordPerStep) {
  TempDir dir;
  const auto path = dir.path / "metrics.jsonl";
  {
    std::ofstream out(path);
    out << to_json_line({1, 1.0}, 0.1) << '\n'
        << to_json_line({2, 2.0}, 0.2) << '\n'
        << to_json_line({2, 5.0}, 0.3) << "\n\n";
  }
  const auto log = read_metrics_log(path);
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log[1].lifted, 5.0);
  EXPECT_THROW(read_metrics_log(dir.path / "missing.jsonl"), LoadError);
}

TEST(Fit, ConfigMismatchRefusesToResume) {
  TempDir dir;
  auto cfg = small_config();
  cfg.trainer.steps = 1;
  fit(cfg, small_dataset(), into(dir.path));
  auto other = cfg;
  other.trainer.steps = 2;
  other.losses.alpha = 0.5;
  FitOptions resume = into(dir.path);
  resume.resume = dir.path / "checkpoint.pt";
  EXPECT_THROW(fit(other, small_dataset(), resume), CheckpointError);
  // Step budget alone may change.
  other.losses.alpha = cfg.losses.alpha;
  EXPECT_NO_THROW(fit(other, small_dataset(), resume));
}

TEST(Fit, DeploymentCheckpointCannotResume) {
  TempDir dir;
  Trainer t(small_config());
  t.save(dir.path / "deploy.pt", false);
  EXPECT_FALSE(read_checkpoint_info(dir.path / "deploy.pt").training_state);
  Trainer u(small_config());
  EXPECT_THROW(u.restore(dir.path / "deploy.pt"), CheckpointError);
  EXPECT_NO_THROW(load_encoder(dir.path / "deploy.pt"));
}

TEST(Fit, SingleTaskHasZeroEntropies) {
  auto cfg = small_config();
  cfg.dataio.generator.tasks = {"stack"};
  cfg.discriminator.num_classes = 1;
  const auto ds = dataio::generate_synthetic_dataset(cfg.dataio.generator, 2);
  Trainer t(cfg);
  for (int i = 0; i < 2; ++i) {
    const auto m = t.step(ds);
    EXPECT_EQ(m.h_cond, 0.0);
    EXPECT_EQ(m.h_marg, 0.0);
    EXPECT_TRUE(std::isfinite(m.lifted));
  }
}

TEST(Fit, ValidationSelectsBestCheckpoint) {
  TempDir dir;
  auto cfg = small_config();
  cfg.trainer.steps = 4;
  cfg.trainer.eval_every = 2;
  auto gen = cfg.dataio.generator;
  gen.demos_per_task = 1;
  const auto validation = dataio::generate_synthetic_dataset(gen, 77, dataio::Split::validation);
  FitOptions opts = into(dir.path);
  opts.validation = &validation;
  const auto r = fit(cfg, small_dataset(), opts);
  ASSERT_TRUE(r.best_checkpoint.has_value());
  ASSERT_TRUE(r.best_alignment.has_value());
  EXPECT_TRUE(fs::exists(*r.best_checkpoint));
  EXPECT_GE(*r.best_alignment, 0.0);
  EXPECT_LT(*r.best_alignment, 1.0);
}

TEST(Fit, DiscriminatorSeparatesHeldOutSkills) {
  // Desk-scale regression: after 500 steps the discriminator's conditional
  // entropy on unseen successful skills sits below log C.
  auto cfg = small_config();
  cfg.trainer.steps = 500;
  cfg.dataio.generator.demos_per_task = 12;
  const auto train = dataio::generate_synthetic_dataset(cfg.dataio.generator, 31);
  auto gen = cfg.dataio.generator;
  gen.demos_per_task = 6;
  gen.fraction_unsuccessful = 0.0;
  const auto held_out = dataio::generate_synthetic_dataset(gen, 32, dataio::Split::validation);

  Trainer t(cfg);
  std::vector<double> encoder_entropy;
  for (int i = 0; i < cfg.trainer.steps; ++i) {
    const auto m = t.step(train);
    encoder_entropy.push_back(m.h_marg + m.h_cond);
  }
  Rng rng = make_rng(3);
  auto tuples = dataio::sample_skill_pairs(held_out, cfg.dataio.skill, 64, true, rng);
  AugmentConfig no_aug;
  no_aug.enabled = false;
  auto images = dataio::skill_tensor(tuples, rng, no_aug);
  torch::NoGradGuard guard;
  t.encoder()->eval();
  t.discriminator()->eval();
  const auto skills = t.encoder()->forward(images).reshape({64, -1});
  const double h = losses::conditional_entropy(t.discriminator()->forward(skills).probs).item<double>();
  EXPECT_LT(h, std::log(2.0));
  const auto tail_mean = [&](std::size_t from, std::size_t to) {
    double s = 0;
    for (std::size_t i = from; i < to; ++i) s += encoder_entropy[i];
    return s / static_cast<double>(to - from);
  };
  EXPECT_LE(tail_mean(400, 500), 2 * std::log(2.0) + 1e-9);
  EXPECT_GT(tail_mean(400, 500), 0.0);
}
