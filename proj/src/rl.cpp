// SPDX-License-Identifier: Apache-2.0
#include "asn/rl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "asn/errors.hpp"
#include "asn/plot.hpp"
#include "asn/stats.hpp"

namespace asn::rl {
namespace fs = std::filesystem;
using dataio::WorldState;

ToyEnv::ToyEnv(std::vector<WorldState> schedule, int image_size, dataio::Appearance appearance, double max_speed)
    : schedule_(std::move(schedule)), image_size_(image_size), appearance_(appearance), max_speed_(max_speed) {
  if (schedule_.empty()) throw SamplingError("toy environment needs a non-empty reference trajectory");
  state_ = schedule_.front();
}

const WorldState& ToyEnv::reference(int t) const {
  return schedule_[static_cast<std::size_t>(std::clamp(t, 0, horizon() - 1))];
}

void ToyEnv::reset(const WorldState& state) {
  state_ = state;
  t_ = 0;
}

void ToyEnv::reset_at(int t) {
  state_ = reference(t);
  t_ = std::clamp(t, 0, horizon() - 1);
}

void ToyEnv::step(const Action& action) {
  namespace w = dataio::world;
  state_.effector_x = std::clamp(state_.effector_x + std::clamp(action[0], -1.0, 1.0) * max_speed_, 0.02, 0.98);
  state_.effector_y = std::clamp(state_.effector_y + std::clamp(action[1], -1.0, 1.0) * max_speed_,
                                 w::kGroundY + w::kGripperHalfHeight, 0.98);
  ++t_;
  const WorldState& before = reference(t_ - 1);
  const WorldState& now = reference(t_);
  if (before.attachment != now.attachment || before.attached != now.attached) {
    if (before.attachment != dataio::Attachment::none && state_.attachment != dataio::Attachment::none) {
      dataio::release(state_);
    }
    if (now.attachment != dataio::Attachment::none && state_.attachment == dataio::Attachment::none) {
      const auto& ref_block = now.blocks[now.attached];
      const auto& block = state_.blocks[now.attached];
      const double cx = block.x + (now.effector_x - ref_block.x);
      const double cy = block.y + (now.effector_y - ref_block.y);
      if (std::hypot(state_.effector_x - cx, state_.effector_y - cy) < kContactRadius) {
        dataio::attach(state_, now.attached, now.attachment);
      }
    }
  }
  dataio::follow_effector(state_);
}

dataio::Image ToyEnv::render(int view) const { return dataio::render(state_, view, image_size_, appearance_); }

double effector_distance(const WorldState& a, const WorldState& b) {
  return std::hypot(a.effector_x - b.effector_x, a.effector_y - b.effector_y);
}

double embedding_reward(double distance, const RewardSpec& spec) {
  return distance < spec.xi_reward ? std::max(0.0, spec.bonus - distance) : 0.0;
}

double embedding_reward(const torch::Tensor& agent_embedding, const torch::Tensor& demo_embedding,
                        const RewardSpec& spec) {
  if (agent_embedding.numel() != demo_embedding.numel()) throw ShapeError("reward embeddings differ in dimension");
  const double d = (agent_embedding.to(torch::kDouble).flatten() - demo_embedding.to(torch::kDouble).flatten())
                       .norm()
                       .item<double>();
  return embedding_reward(d, spec);
}

double calibrate_xi_reward(const torch::Tensor& view_a, const torch::Tensor& view_b, double percentile) {
  if (view_a.sizes() != view_b.sizes() || view_a.size(0) == 0) throw ShapeError("calibration needs aligned views");
  auto d = (view_a.to(torch::kDouble) - view_b.to(torch::kDouble)).norm(2, 1).contiguous();
  std::vector<double> values(d.data_ptr<double>(), d.data_ptr<double>() + d.numel());
  return stats::percentile(values, percentile);
}

int reset_along_demonstration(ToyEnv& env, const dataio::Demonstration& demo, Rng& rng) {
  if (!demo.has_states()) throw SamplingError("demonstration " + demo.demo_id + " has no state annotations");
  const int t = uniform_int(rng, 0, demo.length() - 1);
  env.reset_at(t);
  return t;
}

bool early_terminate(const WorldState& env_state, const WorldState& demo_state, double threshold) {
  return effector_distance(env_state, demo_state) > threshold;
}

PolicyImpl::PolicyImpl(int obs_dim, int hidden, double init_log_std) {
  namespace nn = torch::nn;
  actor_ = register_module("actor", nn::Sequential(nn::Linear(obs_dim, hidden), nn::Tanh(),
                                                   nn::Linear(hidden, hidden), nn::Tanh(), nn::Linear(hidden, 2)));
  critic_ = register_module("critic", nn::Sequential(nn::Linear(obs_dim, hidden), nn::Tanh(),
                                                     nn::Linear(hidden, hidden), nn::Tanh(), nn::Linear(hidden, 1)));
  {
    torch::NoGradGuard guard;
    auto last = actor_->ptr<nn::LinearImpl>(4);
    last->weight.mul_(0.01);
    last->bias.zero_();
  }
  log_std_ = register_parameter("log_std", torch::full({2}, init_log_std));
  obs_mean_ = register_buffer("obs_mean", torch::zeros({obs_dim}));
  obs_var_ = register_buffer("obs_var", torch::ones({obs_dim}));
  obs_count_ = register_buffer("obs_count", torch::zeros({1}));
}

torch::Tensor PolicyImpl::normalize(const torch::Tensor& obs) const {
  return ((obs - obs_mean_) / (obs_var_ + 1e-8).sqrt()).clamp(-10, 10);
}

void PolicyImpl::observe(const torch::Tensor& obs) {
  torch::NoGradGuard guard;
  const double n = static_cast<double>(obs.size(0));
  const double count = obs_count_.item<double>();
  const auto batch_mean = obs.mean(0);
  const auto batch_var = obs.var(0, /*unbiased=*/false);
  const auto delta = batch_mean - obs_mean_;
  const double total = count + n;
  auto new_mean = obs_mean_ + delta * (n / total);
  auto m2 = obs_var_ * count + batch_var * n + delta.square() * (count * n / total);
  obs_mean_.copy_(new_mean);
  obs_var_.copy_(m2 / total);
  obs_count_.fill_(total);
}

std::vector<torch::Tensor> PolicyImpl::actor_parameters() const {
  auto params = actor_->parameters();
  params.push_back(log_std_);
  return params;
}

torch::Tensor PolicyImpl::mean(const torch::Tensor& obs) { return actor_->forward(normalize(obs)); }
torch::Tensor PolicyImpl::value(const torch::Tensor& obs) { return critic_->forward(normalize(obs)).squeeze(-1); }

torch::Tensor PolicyImpl::log_prob(const torch::Tensor& obs, const torch::Tensor& actions) {
  const auto mu = mean(obs);
  const auto z = (actions - mu) / log_std_.exp();
  return (-0.5 * z.square() - log_std_ - 0.5 * std::log(2.0 * M_PI)).sum(-1);
}

namespace {

struct Transition {
  torch::Tensor obs;
  Action action;
  double log_prob = 0;
  double value = 0;
  double reward = 0;
};

class Rewarder {
 public:
  Rewarder(const RlConfig& config, const RewardSpec& spec) : config_(config), spec_(spec) {}

  double operator()(const torch::Tensor& agent_embedding, const WorldState& state, const WorldState& reference,
                    int t) const {
    switch (config_.reward) {
      case RewardKind::embedding: {
        const auto f = spec_.demo_embeddings.size(0);
        return embedding_reward(agent_embedding, spec_.demo_embeddings[std::min<std::int64_t>(t, f - 1)], spec_);
      }
      case RewardKind::ground_truth: {
        double d = effector_distance(state, reference);
        for (std::size_t i = 0; i < state.blocks.size(); ++i) {
          d += std::hypot(state.blocks[i].x - reference.blocks[i].x, state.blocks[i].y - reference.blocks[i].y);
        }
        return std::max(0.0, config_.bonus * (1.0 - d / config_.terminate_threshold));
      }
      case RewardKind::zero:
        return 0.0;
    }
    return 0.0;
  }

 private:
  const RlConfig& config_;
  const RewardSpec& spec_;
};

torch::Tensor observation(const torch::Tensor& embedding, const WorldState& state, int t, int horizon) {
  const double phase = horizon > 1 ? std::min(1.0, t / static_cast<double>(horizon - 1)) : 1.0;
  auto extra = torch::tensor({state.effector_x, state.effector_y, phase}, torch::kFloat);
  return torch::cat({embedding.to(torch::kFloat).flatten(), extra});
}

}  // namespace

PpoResult ppo_train(const dataio::Demonstration& demo, Encoder& encoder, const PpoSetup& setup) {
  const RlConfig& cfg = setup.config;
  if (!demo.has_states()) throw SamplingError("demonstration " + demo.demo_id + " has no state annotations");
  torch::manual_seed(setup.seed);
  Rng rng = make_rng(setup.seed, 31);

  const int horizon = demo.length();
  ToyEnv prototype(demo.states, setup.image_size, demo.appearance, cfg.max_speed);

  RewardSpec spec;
  spec.bonus = cfg.bonus;
  spec.demo_embeddings = embed_sequence(encoder, demo.views.at(cfg.demo_view));
  spec.xi_reward = cfg.xi_reward > 0
                       ? cfg.xi_reward
                       : calibrate_xi_reward(spec.demo_embeddings, embed_sequence(encoder, demo.views.at(cfg.agent_view)),
                                             cfg.xi_reward_percentile);
  if (!(spec.xi_reward > 0)) spec.xi_reward = 1e-6;
  const Rewarder rewarder(cfg, spec);

  const int obs_dim = encoder->embedding_dim() + 3;
  Policy policy(obs_dim, cfg.hidden, cfg.init_log_std);
  torch::optim::Adam optim(policy->parameters(), torch::optim::AdamOptions(cfg.learning_rate));
  // Internal reward scale for the critic; reported returns are unscaled.
  const double reward_scale = 1.0 / std::max(cfg.bonus, 1e-9);

  auto embed_envs = [&](const std::vector<ToyEnv*>& envs) {
    std::vector<dataio::Image> images;
    images.reserve(envs.size());
    for (auto* env : envs) images.push_back(env->render(cfg.agent_view));
    std::vector<const dataio::Image*> ptrs;
    for (const auto& img : images) ptrs.push_back(&img);
    return embed_images(encoder, ptrs);
  };

  auto evaluate = [&](IterationStats& stats) {
    torch::NoGradGuard guard;
    ToyEnv env = prototype;
    env.reset_at(0);
    double ret = 0;
    auto emb = embed_envs({&env})[0];
    bool terminated = false;
    while (env.time() < horizon - 1) {
      const auto obs = observation(emb, env.state(), env.time(), horizon).unsqueeze(0);
      const auto a = policy->mean(obs)[0];
      env.step({a[0].item<double>(), a[1].item<double>()});
      emb = embed_envs({&env})[0];
      if (!terminated && early_terminate(env.state(), env.reference(env.time()), cfg.terminate_threshold)) {
        terminated = true;
      }
      if (!terminated) ret += rewarder(emb, env.state(), env.reference(env.time()), env.time());
    }
    stats.eval_return = ret;
    stats.eval_distance = effector_distance(env.state(), env.reference(horizon - 1));
  };

  PpoResult result;
  result.xi_reward = spec.xi_reward;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const int episodes = cfg.episodes_per_iteration;
    std::vector<ToyEnv> envs(episodes, prototype);
    std::vector<std::vector<Transition>> trajectories(episodes);
    std::vector<int> start(episodes);
    std::vector<bool> active(episodes, true);
    for (int e = 0; e < episodes; ++e) start[e] = reset_along_demonstration(envs[e], demo, rng);
    std::vector<torch::Tensor> embeddings(episodes);
    {
      std::vector<ToyEnv*> ptrs;
      for (auto& env : envs) ptrs.push_back(&env);
      auto emb = embed_envs(ptrs);
      for (int e = 0; e < episodes; ++e) embeddings[e] = emb[e];
    }
    // Lockstep rollout; an episode ends at the reference's final step (at least one
    // step) or on early termination.
    while (std::any_of(active.begin(), active.end(), [](bool a) { return a; })) {
      std::vector<int> live;
      for (int e = 0; e < episodes; ++e)
        if (active[e]) live.push_back(e);
      std::vector<torch::Tensor> obs_rows;
      for (int e : live) obs_rows.push_back(observation(embeddings[e], envs[e].state(), envs[e].time(), horizon));
      const auto obs = torch::stack(obs_rows);
      torch::Tensor actions, log_probs, values;
      {
        torch::NoGradGuard guard;
        const auto mu = policy->mean(obs);
        actions = mu + torch::randn_like(mu) * policy->log_std().exp();
        log_probs = policy->log_prob(obs, actions);
        values = policy->value(obs);
      }
      std::vector<ToyEnv*> stepped;
      for (std::size_t i = 0; i < live.size(); ++i) {
        const int e = live[i];
        Transition tr;
        tr.obs = obs_rows[i];
        tr.action = {actions[i][0].item<double>(), actions[i][1].item<double>()};
        tr.log_prob = log_probs[i].item<double>();
        tr.value = values[i].item<double>();
        envs[e].step(tr.action);
        trajectories[e].push_back(tr);
        stepped.push_back(&envs[e]);
      }
      const auto emb = embed_envs(stepped);
      for (std::size_t i = 0; i < live.size(); ++i) {
        const int e = live[i];
        auto& env = envs[e];
        embeddings[e] = emb[i];
        const auto& ref = env.reference(env.time());
        if (early_terminate(env.state(), ref, cfg.terminate_threshold)) {
          trajectories[e].back().reward = 0.0;
          active[e] = false;
          continue;
        }
        trajectories[e].back().reward = rewarder(emb[i], env.state(), ref, env.time());
        if (env.time() >= horizon - 1) active[e] = false;
      }
    }

    // GAE; every episode end is terminal because the phase is observed.
    std::vector<torch::Tensor> obs_all;
    std::vector<float> act_all, logp_all, adv_all, ret_all;
    IterationStats stats;
    stats.iteration = iter + 1;
    for (const auto& traj : trajectories) {
      double episode_return = 0;
      std::vector<double> adv(traj.size());
      double next_value = 0, gae = 0;
      for (int i = static_cast<int>(traj.size()) - 1; i >= 0; --i) {
        const double r = traj[i].reward * reward_scale;
        const double delta = r + cfg.discount * next_value - traj[i].value;
        gae = delta + cfg.discount * cfg.gae_lambda * gae;
        adv[i] = gae;
        next_value = traj[i].value;
        episode_return += traj[i].reward;
      }
      for (std::size_t i = 0; i < traj.size(); ++i) {
        obs_all.push_back(traj[i].obs);
        act_all.push_back(static_cast<float>(traj[i].action[0]));
        act_all.push_back(static_cast<float>(traj[i].action[1]));
        logp_all.push_back(static_cast<float>(traj[i].log_prob));
        adv_all.push_back(static_cast<float>(adv[i]));
        ret_all.push_back(static_cast<float>(adv[i] + traj[i].value));
      }
      stats.mean_return += episode_return / episodes;
      stats.mean_length += static_cast<double>(traj.size()) / episodes;
    }
    const auto n = static_cast<std::int64_t>(obs_all.size());
    const auto obs = torch::stack(obs_all);
    const auto act = torch::tensor(act_all).reshape({n, 2});
    const auto old_logp = torch::tensor(logp_all);
    auto adv = torch::tensor(adv_all);
    const auto returns = torch::tensor(ret_all);
    if (!torch::isfinite(adv).all().item<bool>() || !torch::isfinite(returns).all().item<bool>()) {
      std::ostringstream out;
      out << "non-finite advantages at PPO iteration " << iter + 1 << ": samples=" << n
          << " mean_return=" << stats.mean_return << " log_std=" << policy->log_std();
      throw TrainingError(out.str());
    }
    if (n > 1) adv = (adv - adv.mean()) / (adv.std() + 1e-8);

    // Linear learning-rate decay over the run.
    const double lr = cfg.learning_rate * (1.0 - static_cast<double>(iter) / cfg.iterations);
    for (auto& group : optim.param_groups()) static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const auto order = torch::randperm(n, torch::kLong);
      for (std::int64_t lo = 0; lo < n; lo += cfg.minibatch) {
        const auto idx = order.narrow(0, lo, std::min<std::int64_t>(cfg.minibatch, n - lo));
        const auto logp = policy->log_prob(obs.index_select(0, idx), act.index_select(0, idx));
        const auto ratio = (logp - old_logp.index_select(0, idx)).exp();
        const auto a = adv.index_select(0, idx);
        const auto surrogate = torch::min(ratio * a, ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * a);
        const auto value_loss = (policy->value(obs.index_select(0, idx)) - returns.index_select(0, idx)).square();
        const auto loss = -surrogate.mean() + 0.5 * value_loss.mean();
        optim.zero_grad();
        loss.backward();
        // Separate clips so the critic's larger gradients do not throttle the actor.
        torch::nn::utils::clip_grad_norm_(policy->actor_parameters(), 0.5);
        torch::nn::utils::clip_grad_norm_(policy->critic_parameters(), 0.5);
        optim.step();
      }
    }
    policy->observe(obs);

    evaluate(stats);
    result.curve.push_back(stats);
    if (setup.on_iteration) setup.on_iteration(stats);
  }

  IterationStats final_stats;
  evaluate(final_stats);
  result.final_distance = final_stats.eval_distance;
  result.reached_goal = final_stats.eval_distance < cfg.goal_threshold;
  result.policy = policy;
  return result;
}

void write_learning_curve(const std::vector<IterationStats>& curve, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "learning_curve.jsonl");
  std::vector<double> xs, ys;
  double lo = 0, hi = 1;
  for (const auto& s : curve) {
    nlohmann::json j = {{"iteration", s.iteration},     {"mean_return", s.mean_return},
                        {"mean_length", s.mean_length}, {"eval_return", s.eval_return},
                        {"eval_distance", s.eval_distance}};
    out << j.dump() << '\n';
    xs.push_back(s.iteration);
    ys.push_back(s.mean_return);
    lo = std::min(lo, s.mean_return);
    hi = std::max(hi, s.mean_return);
  }
  if (!out) throw Error("cannot write learning curve to " + dir.string());
  plot::Canvas canvas(640, 360, 0.0, std::max<double>(1.0, static_cast<double>(curve.size())), lo, hi);
  canvas.axes();
  canvas.polyline(xs, ys, {214, 39, 40}, 2);
  dataio::write_png(canvas.raster(), dir / "learning_curve.png");
}

}  // namespace asn::rl
