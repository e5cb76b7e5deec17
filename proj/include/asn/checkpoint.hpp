// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "asn/config.hpp"
#include "asn/encoder.hpp"

namespace asn {

// Container layout (torch archive):
//   meta/format    "asn-checkpoint"
//   meta/version   kCheckpointVersion
//   meta/config    frozen config text
//   meta/step      training step counter
//   meta/training  whether discriminator and optimizer state are present
//   encoder/...    encoder parameters and buffers
//   discriminator/..., optim/encoder/..., optim/discriminator/...  (training only)
//   rng/sampler    sampler generator state (text), rng/torch  torch generator state
inline constexpr std::int64_t kCheckpointVersion = 1;

struct CheckpointInfo {
  std::int64_t version = 0;
  ExperimentConfig config;
  std::int64_t step = 0;
  bool training_state = false;
};

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

// Builds an encoder from the echoed config and loads its weights.
Encoder load_encoder(const std::filesystem::path& path);

// Config text with the keys that may change between runs of one model
// (step budget, periodic intervals, output paths) removed.
std::string model_identity(const ExperimentConfig& config);

}  // namespace asn
