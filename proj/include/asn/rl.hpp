// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "asn/config.hpp"
#include "asn/dataio/dataset.hpp"
#include "asn/dataio/world.hpp"
#include "asn/encoder.hpp"
#include "asn/random.hpp"

namespace asn::rl {

using Action = std::array<double, 2>;

// Abstract control environment; a simulator backend only needs these four calls.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual void reset(const dataio::WorldState& state) = 0;
  virtual void step(const Action& action) = 0;
  virtual dataio::Image render(int view) const = 0;
  virtual const dataio::WorldState& state() const = 0;
};

// Block world driven by effector velocity commands. Each action component is
// clipped to [-1, 1] and scaled by max_speed. Grasp, push and release follow
// the schedule of a reference trajectory: a contact event from the reference
// takes effect only when the effector is within `contact_radius` of the point
// where the reference made contact.
class ToyEnv : public Environment {
 public:
  ToyEnv(std::vector<dataio::WorldState> schedule, int image_size, dataio::Appearance appearance, double max_speed);

  void reset(const dataio::WorldState& state) override;
  void reset_at(int t);  // state of the reference at step t
  void step(const Action& action) override;
  dataio::Image render(int view) const override;
  const dataio::WorldState& state() const override { return state_; }

  int time() const { return t_; }
  int horizon() const { return static_cast<int>(schedule_.size()); }
  const dataio::WorldState& reference(int t) const;  // clamped to the last state

  static constexpr double kContactRadius = 0.06;

 private:
  std::vector<dataio::WorldState> schedule_;
  int image_size_;
  dataio::Appearance appearance_;
  double max_speed_;
  dataio::WorldState state_;
  int t_ = 0;
};

double effector_distance(const dataio::WorldState& a, const dataio::WorldState& b);

struct RewardSpec {
  torch::Tensor demo_embeddings;  // F x n
  double xi_reward = 1.0;
  double bonus = 10.0;
};

// bonus - d when d < xi_reward, else 0; never negative.
double embedding_reward(double distance, const RewardSpec& spec);
double embedding_reward(const torch::Tensor& agent_embedding, const torch::Tensor& demo_embedding,
                        const RewardSpec& spec);

// Percentile of the per-timestep distances between the two views of `demo`.
double calibrate_xi_reward(const torch::Tensor& view_a, const torch::Tensor& view_b, double percentile);

// Sets env to the reference state at a uniformly drawn timestep and returns it.
int reset_along_demonstration(ToyEnv& env, const dataio::Demonstration& demo, Rng& rng);

// True iff the effectors are farther apart than threshold.
bool early_terminate(const dataio::WorldState& env_state, const dataio::WorldState& demo_state, double threshold);

class PolicyImpl : public torch::nn::Module {
 public:
  PolicyImpl(int obs_dim, int hidden, double init_log_std);

  torch::Tensor mean(const torch::Tensor& obs);
  torch::Tensor value(const torch::Tensor& obs);
  torch::Tensor log_prob(const torch::Tensor& obs, const torch::Tensor& actions);
  torch::Tensor log_std() const { return log_std_; }
  std::vector<torch::Tensor> actor_parameters() const;
  std::vector<torch::Tensor> critic_parameters() const { return critic_->parameters(); }

  // Running observation statistics, updated from each rollout before the update.
  void observe(const torch::Tensor& obs);
  torch::Tensor normalize(const torch::Tensor& obs) const;

 private:
  torch::nn::Sequential actor_{nullptr}, critic_{nullptr};
  torch::Tensor log_std_, obs_mean_, obs_var_, obs_count_;
};
TORCH_MODULE(Policy);

struct IterationStats {
  int iteration = 0;
  double mean_return = 0.0;      // undiscounted, over this iteration's episodes
  double mean_length = 0.0;
  double eval_return = 0.0;      // deterministic rollout from t = 0
  double eval_distance = 0.0;    // final effector distance to the reference goal
};

struct PpoResult {
  Policy policy{nullptr};
  std::vector<IterationStats> curve;
  double final_distance = 0.0;
  bool reached_goal = false;
  double xi_reward = 0.0;
};

// Agent observation: embedding of its own camera frame, effector position and
// phase t / (F - 1). The policy sees nothing else.
struct PpoSetup {
  RlConfig config;
  std::uint64_t seed = 0;
  int image_size = 64;
  std::function<void(const IterationStats&)> on_iteration;
};

PpoResult ppo_train(const dataio::Demonstration& demo, Encoder& encoder, const PpoSetup& setup);

// Writes the learning curve as line-delimited records plus a PNG plot.
void write_learning_curve(const std::vector<IterationStats>& curve, const std::filesystem::path& dir);

}  // namespace asn::rl
