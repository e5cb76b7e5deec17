// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "asn/config.hpp"
#include "asn/errors.hpp"

using namespace asn;

TEST(Config, DefaultsMatchDocumentedValues) {
  const ExperimentConfig c;
  EXPECT_EQ(c.encoder.embedding_dim, 32);
  EXPECT_DOUBLE_EQ(c.losses.alpha, 0.1);
  EXPECT_DOUBLE_EQ(c.losses.beta, 1.0);
  EXPECT_DOUBLE_EQ(c.losses.lambda_margin, 1.0);
  EXPECT_DOUBLE_EQ(c.losses.xi_sim, 10.0);
  EXPECT_DOUBLE_EQ(c.trainer.learning_rate, 1e-3);
  EXPECT_EQ(c.dataio.batch.frames, 32);
  EXPECT_EQ(c.dataio.batch.view_pairs, 4);
  EXPECT_EQ(c.dataio.skill.num_domain_frames, 2);
  EXPECT_EQ(c.dataio.skill.stride, 15);
  EXPECT_EQ(c.discriminator.latent_dim, 64);
  EXPECT_DOUBLE_EQ(c.rl.learning_rate, 1e-5);
  EXPECT_EQ(c.rl.minibatch, 32);
  EXPECT_DOUBLE_EQ(c.rl.bonus, 10.0);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, TextRoundTripIsExact) {
  ExperimentConfig c;
  c.seed = 1234567890123ULL;
  c.losses.alpha = 0.1 + 1e-17;
  c.losses.xi_sim = 1.0 / 3.0;
  c.dataio.generator.tasks = {"stack", "separate_stack"};
  c.rl.reward = RewardKind::ground_truth;
  c.discriminator.latent = LatentMode::fc;
  const auto text = to_text(c);
  const auto back = parse_config(text);
  EXPECT_EQ(to_text(back), text);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.losses.xi_sim, c.losses.xi_sim);
  EXPECT_EQ(back.dataio.generator.tasks, c.dataio.generator.tasks);
}

TEST(Config, EveryKeyReadsBackThroughGetValue) {
  const ExperimentConfig c;
  for (const auto& key : config_keys()) {
    ExperimentConfig d;
    EXPECT_NO_THROW(set_value(d, key, get_value(c, key))) << key;
    EXPECT_EQ(get_value(d, key), get_value(c, key)) << key;
  }
}

TEST(Config, OverrideIsRecorded) {
  ExperimentConfig c;
  apply_override(c, "losses.alpha=0");
  EXPECT_EQ(c.losses.alpha, 0.0);
  EXPECT_NE(to_text(c).find("alpha = 0\n"), std::string::npos);
  apply_override(c, " trainer.steps = 17 ");
  EXPECT_EQ(c.trainer.steps, 17);
}

TEST(Config, UnknownKeyNamesTheKey) {
  ExperimentConfig c;
  try {
    apply_override(c, "losses.alpah=0");
    FAIL() << "expected UnknownKeyError";
  } catch (const UnknownKeyError& e) {
    EXPECT_EQ(e.key(), "losses.alpah");
    EXPECT_NE(std::string(e.what()).find("losses.alpah"), std::string::npos);
  }
  EXPECT_THROW(parse_config("[losses]\nalpah = 0\n"), UnknownKeyError);
  EXPECT_THROW(parse_config("[nosuch]\nkey = 1\n"), UnknownKeyError);
}

TEST(Config, MalformedValuesAreConfigErrors) {
  ExperimentConfig c;
  EXPECT_THROW(apply_override(c, "trainer.steps=ten"), ConfigError);
  EXPECT_THROW(apply_override(c, "trainer.adversarial=maybe"), ConfigError);
  EXPECT_THROW(apply_override(c, "encoder.backbone=huge"), ConfigError);
  EXPECT_THROW(apply_override(c, "losses.alpha"), ConfigError);
}

TEST(Config, ValidateRejectsInvariantViolations) {
  auto expect_key = [](ExperimentConfig c, const std::string& key) {
    try {
      c.validate();
      FAIL() << "expected ConfigError for " << key;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.key(), key);
    }
  };
  ExperimentConfig c;
  c.trainer.learning_rate = 0;
  expect_key(c, "trainer.learning_rate");
  c = {};
  c.losses.alpha = -1;
  expect_key(c, "losses.alpha");
  c = {};
  c.losses.lambda_margin = 0;
  expect_key(c, "losses.lambda");
  c = {};
  c.encoder.embedding_dim = 1;
  expect_key(c, "encoder.embedding_dim");
  c = {};
  c.dataio.generator.fraction_unsuccessful = 1.0;
  expect_key(c, "dataio.fraction_unsuccessful");
}

TEST(Config, EmptySectionsAndCommentsParse) {
  const auto c = parse_config("; comment\n[losses]\n\n[trainer]\nsteps = 3\n");
  EXPECT_EQ(c.trainer.steps, 3);
}

TEST(Config, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "asn_test_config.ini";
  ExperimentConfig c;
  c.seed = 99;
  write_config(c, path);
  EXPECT_EQ(to_text(load_config(path)), to_text(c));
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path), Error);
}
