// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace asn {

// Photometric and geometric augmentation applied to raw training frames.
struct AugmentConfig {
  bool enabled = true;
  double brightness_min = 0.7, brightness_max = 1.3;
  double contrast_min = 0.7, contrast_max = 1.3;
  double saturation_min = 0.7, saturation_max = 1.3;
  double mirror_prob = 0.5;
  bool crop = false;  // real-world style data only
  double crop_min_area = 0.8;
};

// Structure of the metric-learning batch.
struct BatchSpec {
  int view_pairs = 4;
  int frames = 32;
  int negative_margin = 2;  // frames closer than this to an anchor are not negatives
};

// A skill is `num_domain_frames` frames of one view spaced `stride` frames apart.
struct SkillFrameSpec {
  int num_domain_frames = 2;
  int stride = 15;
};

struct GeneratorConfig {
  std::vector<std::string> tasks{"stack", "color_push"};
  int demos_per_task = 40;
  double fraction_unsuccessful = 0.5;
  int frames_per_demo = 40;
  int image_size = 64;
  int fps = 10;
};

struct DataConfig {
  std::string root;  // dataset root on disk; empty means generate in memory
  GeneratorConfig generator;
  std::vector<std::string> test_tasks{"color_stack"};
  int validation_demos_per_task = 8;
  int test_demos_per_task = 20;
  AugmentConfig augment;
  BatchSpec batch;
  SkillFrameSpec skill;
  int skill_batch = 16;  // skill tuples per discriminator batch
};

enum class Backbone { small, full };

struct EncoderConfig {
  Backbone backbone = Backbone::small;
  int embedding_dim = 32;
  int feature_channels = 32;  // conv head width
  int input_size = 64;
  int inception_blocks = 3;  // full backbone is truncated after this many mixed blocks (1..3)
  bool l2_normalize = false;
  std::string pretrained_path;  // optional backbone weights (full backbone only)
};

enum class LatentMode { kl, fc };

struct DiscriminatorConfig {
  LatentMode latent = LatentMode::kl;
  int latent_dim = 64;
  int hidden = 128;
  double dropout = 0.3;
  int num_classes = 2;
};

enum class MetricVariant { lifted_asn, lifted, triplet, npair };
enum class Similarity { dot, neg_sq_euclidean };

struct LossConfig {
  double alpha = 0.1;
  double beta = 1.0;
  double lambda_margin = 1.0;
  double xi_sim = 10.0;
  double triplet_margin = 1.0;
  MetricVariant variant = MetricVariant::lifted_asn;
  Similarity similarity = Similarity::dot;
  bool encoder_entropy = true;        // entropy terms in the encoder objective
  bool discriminator_entropy = true;  // entropy terms in the discriminator objective
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::int64_t steps = 1000;
  int encoder_updates = 1;
  int discriminator_updates = 1;
  bool adversarial = true;  // false trains the metric loss alone
  bool success_only = true;
  std::int64_t checkpoint_every = 500;
  std::int64_t eval_every = 0;  // validation alignment period, 0 disables
};

struct EvaluationConfig {
  double tsne_perplexity = 10.0;
  int tsne_iterations = 750;
};

enum class RewardKind { embedding, ground_truth, zero };

struct RlConfig {
  RewardKind reward = RewardKind::embedding;
  double learning_rate = 1e-5;
  int minibatch = 32;
  int iterations = 200;
  int episodes_per_iteration = 64;
  int epochs = 4;
  double clip = 0.2;
  double gae_lambda = 0.95;
  double discount = 0.99;
  int hidden = 64;
  double init_log_std = -0.5;
  double max_speed = 0.08;
  double terminate_threshold = 0.25;
  double goal_threshold = 0.05;
  double xi_reward = 0.0;  // 0 selects the self-calibrated threshold
  double xi_reward_percentile = 90.0;
  double bonus = 10.0;
  int agent_view = 0;
  int demo_view = 1;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "runs";
  bool strict_determinism = true;
  DataConfig dataio;
  EncoderConfig encoder;
  DiscriminatorConfig discriminator;
  LossConfig losses;
  TrainConfig trainer;
  EvaluationConfig evaluation;
  RlConfig rl;

  // Throws ConfigError on the first violated invariant.
  void validate() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// `assignment` is "section.key=value".
void apply_override(ExperimentConfig& config, std::string_view assignment);
void set_value(ExperimentConfig& config, std::string_view key, std::string_view value);
std::string get_value(const ExperimentConfig& config, std::string_view key);
std::vector<std::string> config_keys();

// Sectioned key-value text; parse_config(to_text(c)) reproduces c exactly.
std::string to_text(const ExperimentConfig& config);
void write_config(const ExperimentConfig& config, const std::filesystem::path& path);

std::string to_string(Backbone b);
std::string to_string(LatentMode m);
std::string to_string(MetricVariant v);
std::string to_string(Similarity s);
std::string to_string(RewardKind r);

}  // namespace asn
