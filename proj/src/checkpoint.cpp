// SPDX-License-Identifier: Apache-2.0
#include "asn/checkpoint.hpp"

#include <torch/torch.h>

#include "asn/errors.hpp"

namespace asn {
namespace fs = std::filesystem;

std::string model_identity(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  const ExperimentConfig defaults;
  c.trainer.steps = defaults.trainer.steps;
  c.trainer.checkpoint_every = defaults.trainer.checkpoint_every;
  c.trainer.eval_every = defaults.trainer.eval_every;
  c.output_dir = defaults.output_dir;
  c.dataio.root = defaults.dataio.root;
  return to_text(c);
}

CheckpointInfo read_checkpoint_info(const fs::path& path) {
  if (!fs::exists(path)) throw LoadError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw CheckpointError("cannot read checkpoint " + path.string());
  }
  c10::IValue format, version, config, step, training;
  if (!archive.try_read("meta/format", format) || format.toStringRef() != "asn-checkpoint") {
    throw CheckpointError(path.string() + " is not an asn checkpoint");
  }
  archive.read("meta/version", version);
  archive.read("meta/config", config);
  archive.read("meta/step", step);
  archive.read("meta/training", training);
  CheckpointInfo info;
  info.version = version.toInt();
  if (info.version > kCheckpointVersion) {
    throw CheckpointError(path.string() + " has unsupported version " + std::to_string(info.version));
  }
  info.config = parse_config(config.toStringRef());
  info.step = step.toInt();
  info.training_state = training.toBool();
  return info;
}

Encoder load_encoder(const fs::path& path) {
  const CheckpointInfo info = read_checkpoint_info(path);
  EncoderConfig cfg = info.config.encoder;
  cfg.pretrained_path.clear();  // weights come from the checkpoint
  Encoder encoder(cfg);
  torch::serialize::InputArchive archive, enc;
  archive.load_from(path.string());
  archive.read("encoder", enc);
  encoder->load(enc);
  encoder->eval();
  return encoder;
}

}  // namespace asn
