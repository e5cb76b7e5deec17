// SPDX-License-Identifier: Apache-2.0
#include "asn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>

#include "asn/checkpoint.hpp"
#include "asn/errors.hpp"
#include "asn/evaluation.hpp"
#include "asn/losses.hpp"

namespace asn {
namespace fs = std::filesystem;
namespace {

void set_requires_grad(torch::nn::Module& module, bool on) {
  for (auto& p : module.parameters()) p.set_requires_grad(on);
}

std::string describe(const char* name, const torch::Tensor& t) {
  std::ostringstream out;
  auto d = t.detach().to(torch::kDouble);
  out << name << ": shape=" << t.sizes() << " finite=" << torch::isfinite(d).all().item<bool>();
  if (d.numel() > 0) {
    auto finite = d.masked_select(torch::isfinite(d));
    if (finite.numel() > 0) {
      out << " min=" << finite.min().item<double>() << " max=" << finite.max().item<double>()
          << " mean=" << finite.mean().item<double>();
    }
  }
  return out.str();
}

struct Diagnostics {
  std::vector<std::string> lines;
  void add(const char* name, const torch::Tensor& t) {
    if (t.defined()) lines.push_back(describe(name, t));
  }
  [[noreturn]] void fail(std::int64_t step, const char* what) const {
    std::ostringstream out;
    out << "non-finite " << what << " at step " << step << "; batch statistics:";
    for (const auto& l : lines) out << "\n  " << l;
    throw TrainingError(out.str());
  }
};

}  // namespace

std::string to_json_line(const TrainMetrics& m, double wall_time) {
  nlohmann::json j = {{"step", m.step},     {"lifted", m.lifted}, {"h_cond", m.h_cond},
                      {"h_marg", m.h_marg}, {"kl", m.kl},         {"loss_d", m.loss_d},
                      {"loss_e", m.loss_e}, {"wall_time", wall_time}};
  return j.dump();
}

TrainMetrics metrics_from_json_line(const std::string& line) {
  auto j = nlohmann::json::parse(line);
  TrainMetrics m;
  m.step = j.at("step").get<std::int64_t>();
  m.lifted = j.at("lifted").get<double>();
  m.h_cond = j.at("h_cond").get<double>();
  m.h_marg = j.at("h_marg").get<double>();
  m.kl = j.at("kl").get<double>();
  m.loss_d = j.at("loss_d").get<double>();
  m.loss_e = j.at("loss_e").get<double>();
  return m;
}

std::vector<TrainMetrics> read_metrics_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open metrics log " + path.string());
  // Replay semantics: a later record for the same step supersedes earlier ones.
  std::map<std::int64_t, TrainMetrics> by_step;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto m = metrics_from_json_line(line);
    by_step[m.step] = m;
  }
  std::vector<TrainMetrics> out;
  for (auto& [step, m] : by_step) out.push_back(m);
  return out;
}

Trainer::Trainer(const ExperimentConfig& config) : config_(config), rng_(make_rng(config.seed, 7)) {
  config_.validate();
  if (config_.strict_determinism) torch::set_num_threads(1);
  torch::manual_seed(config_.seed);
  encoder_ = Encoder(config_.encoder);
  const int skill_dim = config_.dataio.skill.num_domain_frames * config_.encoder.embedding_dim;
  discriminator_ = Discriminator(config_.discriminator, skill_dim);
  const double lr = config_.trainer.learning_rate;
  encoder_optim_ = std::make_unique<torch::optim::Adam>(encoder_->parameters(), torch::optim::AdamOptions(lr));
  discriminator_optim_ =
      std::make_unique<torch::optim::Adam>(discriminator_->parameters(), torch::optim::AdamOptions(lr));
}

TrainMetrics Trainer::train_step(const dataio::MultiViewBatch& metric_batch, const torch::Tensor& skill_images) {
  const auto& cfg = config_;
  const bool adversarial = cfg.trainer.adversarial;
  const int k = cfg.dataio.skill.num_domain_frames;
  const int n = cfg.encoder.embedding_dim;
  encoder_->train();
  discriminator_->train();

  losses::PairStructure pairs{metric_batch.anchor_labels, metric_batch.source_pair_ids, metric_batch.time_indices,
                              cfg.dataio.batch.negative_margin};
  const auto m = metric_batch.images.size(0);

  auto forward = [&](torch::Tensor& metric_emb, torch::Tensor& skills) {
    if (adversarial) {
      auto emb = encoder_->forward(torch::cat({metric_batch.images, skill_images}, 0));
      metric_emb = emb.narrow(0, 0, m);
      skills = emb.narrow(0, m, emb.size(0) - m).reshape({-1, k * n});
    } else {
      metric_emb = encoder_->forward(metric_batch.images);
    }
  };

  TrainMetrics out;
  Diagnostics diag;
  torch::Tensor metric_emb, skills;
  forward(metric_emb, skills);
  diag.add("metric_embeddings", metric_emb);
  diag.add("skill_embeddings", skills);
  auto lifted = losses::metric_loss(metric_emb, pairs, cfg.losses);
  out.lifted = lifted.item<double>();
  if (!std::isfinite(out.lifted)) diag.fail(step_ + 1, "metric loss");

  if (adversarial) {
    // Discriminator: min L_D on detached skills.
    for (int r = 0; r < cfg.trainer.discriminator_updates; ++r) {
      auto d_out = discriminator_->forward(skills.detach());
      auto loss_d = losses::discriminator_loss(d_out.probs, d_out.kl, cfg.losses);
      out.loss_d = loss_d.item<double>();
      out.h_cond = losses::conditional_entropy(d_out.probs).item<double>();
      out.h_marg = losses::marginal_entropy(d_out.probs).item<double>();
      out.kl = d_out.kl.item<double>();
      if (!std::isfinite(out.loss_d)) {
        diag.add("probs", d_out.probs);
        diag.add("mu", d_out.latent.mu);
        diag.add("logvar", d_out.latent.logvar);
        diag.fail(step_ + 1, "discriminator loss");
      }
      discriminator_optim_->zero_grad();
      loss_d.backward();
      discriminator_optim_->step();
    }
  }

  // Encoder: max L_E through a frozen discriminator.
  set_requires_grad(*discriminator_, false);
  for (int r = 0; r < cfg.trainer.encoder_updates; ++r) {
    if (r > 0) {
      forward(metric_emb, skills);
      lifted = losses::metric_loss(metric_emb, pairs, cfg.losses);
    }
    torch::Tensor loss_e;
    if (adversarial) {
      auto d_out = discriminator_->forward(skills);
      loss_e = losses::encoder_loss(d_out.probs, lifted, cfg.losses);
    } else {
      loss_e = -cfg.losses.alpha * lifted;
    }
    out.loss_e = loss_e.item<double>();
    if (!std::isfinite(out.loss_e)) {
      set_requires_grad(*discriminator_, true);
      diag.fail(step_ + 1, "encoder loss");
    }
    encoder_optim_->zero_grad();
    (-loss_e).backward();
    encoder_optim_->step();
  }
  set_requires_grad(*discriminator_, true);

  out.step = ++step_;
  return out;
}

TrainMetrics Trainer::step(const dataio::MultiTaskDataset& dataset) {
  const auto& d = config_.dataio;
  auto metric = dataio::sample_metric_batch(dataset, d.batch, rng_, d.augment);
  torch::Tensor skills;
  if (config_.trainer.adversarial) {
    auto tuples = dataio::sample_skill_pairs(dataset, d.skill, d.skill_batch, config_.trainer.success_only, rng_);
    skills = dataio::skill_tensor(tuples, rng_, d.augment);
  }
  return train_step(metric, skills);
}

void Trainer::save(const fs::path& path, bool training_state) const {
  torch::serialize::OutputArchive archive;
  archive.write("meta/format", c10::IValue(std::string("asn-checkpoint")));
  archive.write("meta/version", c10::IValue(kCheckpointVersion));
  archive.write("meta/config", c10::IValue(to_text(config_)));
  archive.write("meta/step", c10::IValue(step_));
  archive.write("meta/training", c10::IValue(training_state));
  torch::serialize::OutputArchive enc;
  encoder_->save(enc);
  archive.write("encoder", enc);
  if (training_state) {
    torch::serialize::OutputArchive disc, eo, dopt;
    discriminator_->save(disc);
    encoder_optim_->save(eo);
    discriminator_optim_->save(dopt);
    archive.write("discriminator", disc);
    archive.write("optim/encoder", eo);
    archive.write("optim/discriminator", dopt);
    std::ostringstream rng_text;
    rng_text << rng_;
    archive.write("rng/sampler", c10::IValue(rng_text.str()));
    auto gen = at::detail::getDefaultCPUGenerator();
    std::lock_guard<std::mutex> lock(gen.mutex());
    archive.write("rng/torch", gen.get_state());
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  // Write-then-rename so an interrupted save never clobbers the previous checkpoint.
  const fs::path tmp = path.string() + ".tmp";
  archive.save_to(tmp.string());
  fs::rename(tmp, path);
}

void Trainer::restore(const fs::path& path) {
  const CheckpointInfo info = read_checkpoint_info(path);
  if (!info.training_state) throw CheckpointError(path.string() + " is a deployment checkpoint; cannot resume");
  if (model_identity(info.config) != model_identity(config_)) {
    throw CheckpointError("checkpoint " + path.string() + " was written with a different configuration");
  }
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  torch::serialize::InputArchive enc, disc, eo, dopt;
  archive.read("encoder", enc);
  archive.read("discriminator", disc);
  archive.read("optim/encoder", eo);
  archive.read("optim/discriminator", dopt);
  encoder_->load(enc);
  discriminator_->load(disc);
  encoder_optim_->load(eo);
  discriminator_optim_->load(dopt);
  c10::IValue rng_text;
  archive.read("rng/sampler", rng_text);
  std::istringstream in(rng_text.toStringRef());
  in >> rng_;
  torch::Tensor torch_state;
  archive.read("rng/torch", torch_state);
  auto gen = at::detail::getDefaultCPUGenerator();
  {
    std::lock_guard<std::mutex> lock(gen.mutex());
    gen.set_state(torch_state);
  }
  step_ = info.step;
}

FitResult fit(const ExperimentConfig& config, const dataio::MultiTaskDataset& dataset, const FitOptions& options) {
  Trainer trainer(config);
  if (options.resume) trainer.restore(*options.resume);
  fs::create_directories(options.out_dir);
  write_config(config, options.out_dir / "config.ini");

  FitResult result;
  result.checkpoint = options.out_dir / "checkpoint.pt";
  std::ofstream log(options.out_dir / "metrics.jsonl", options.resume ? std::ios::app : std::ios::trunc);
  const auto start = std::chrono::steady_clock::now();
  const auto& tc = config.trainer;

  auto evaluate = [&]() {
    if (!options.validation || options.validation->empty()) return;
    const auto report = eval::evaluate_transfer(trainer.encoder(), *options.validation);
    if (!result.best_alignment || report.mean < *result.best_alignment) {
      result.best_alignment = report.mean;
      result.best_checkpoint = options.out_dir / "best.pt";
      trainer.save(*result.best_checkpoint);
    }
  };

  while (trainer.global_step() < tc.steps) {
    const TrainMetrics m = trainer.step(dataset);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << to_json_line(m, wall) << '\n';
    result.history.push_back(m);
    if (options.on_step) options.on_step(m);
    if (options.after_step) options.after_step(trainer);
    if (tc.checkpoint_every > 0 && m.step % tc.checkpoint_every == 0) {
      log.flush();
      trainer.save(result.checkpoint);
    }
    if (tc.eval_every > 0 && m.step % tc.eval_every == 0) evaluate();
  }
  log.flush();
  trainer.save(result.checkpoint);
  if (tc.eval_every == 0 || trainer.global_step() % tc.eval_every != 0) evaluate();
  return result;
}

}  // namespace asn
