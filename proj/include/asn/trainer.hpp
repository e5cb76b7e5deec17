// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "asn/config.hpp"
#include "asn/dataio/dataset.hpp"
#include "asn/dataio/sampling.hpp"
#include "asn/discriminator.hpp"
#include "asn/encoder.hpp"
#include "asn/random.hpp"

namespace asn {

struct TrainMetrics {
  std::int64_t step = 0;
  double lifted = 0.0;
  double h_cond = 0.0;
  double h_marg = 0.0;
  double kl = 0.0;
  double loss_d = 0.0;
  double loss_e = 0.0;

  bool operator==(const TrainMetrics&) const = default;
};

// One line-delimited record; doubles round-trip exactly.
std::string to_json_line(const TrainMetrics& m, double wall_time);
TrainMetrics metrics_from_json_line(const std::string& line);
std::vector<TrainMetrics> read_metrics_log(const std::filesystem::path& path);

// Alternating optimization: the discriminator descends L_D on detached skill
// embeddings, then the encoder ascends L_E through a frozen discriminator.
// The two parameter sets have separate Adam optimizers.
class Trainer {
 public:
  explicit Trainer(const ExperimentConfig& config);

  TrainMetrics train_step(const dataio::MultiViewBatch& metric_batch, const torch::Tensor& skill_images);

  // Samples both batches from `dataset` with the trainer's generator, then trains.
  TrainMetrics step(const dataio::MultiTaskDataset& dataset);

  // Full training state: weights, optimizer moments, step counter and both RNG
  // streams. `training_state = false` writes a deployment checkpoint with the
  // encoder only.
  void save(const std::filesystem::path& path, bool training_state = true) const;
  // Restores a checkpoint written by save(). Throws CheckpointError when the
  // model-defining configuration differs.
  void restore(const std::filesystem::path& path);

  Encoder& encoder() { return encoder_; }
  Discriminator& discriminator() { return discriminator_; }
  const ExperimentConfig& config() const { return config_; }
  std::int64_t global_step() const { return step_; }
  Rng& rng() { return rng_; }

 private:
  ExperimentConfig config_;
  Encoder encoder_{nullptr};
  Discriminator discriminator_{nullptr};
  std::unique_ptr<torch::optim::Adam> encoder_optim_;
  std::unique_ptr<torch::optim::Adam> discriminator_optim_;
  Rng rng_;
  std::int64_t step_ = 0;
};

struct FitOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume;
  const dataio::MultiTaskDataset* validation = nullptr;  // for best-alignment selection
  std::function<void(const TrainMetrics&)> on_step;
  std::function<void(Trainer&)> after_step;  // read-only probes of the live networks
};

struct FitResult {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> best_checkpoint;
  std::optional<double> best_alignment;
  std::vector<TrainMetrics> history;  // this invocation only
};

// Trains to config.trainer.steps, appending to <out>/metrics.jsonl and writing
// <out>/checkpoint.pt (periodically and at the end) plus <out>/config.ini.
FitResult fit(const ExperimentConfig& config, const dataio::MultiTaskDataset& dataset, const FitOptions& options);

}  // namespace asn
