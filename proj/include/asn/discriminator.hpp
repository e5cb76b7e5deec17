// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

#include <optional>

#include "asn/config.hpp"

namespace asn {

// Diagonal Gaussian over the discriminator latent. sigma = exp(logvar / 2).
struct LatentGaussian {
  torch::Tensor mu;      // ... x k
  torch::Tensor logvar;  // ... x k

  torch::Tensor sigma() const { return torch::exp(0.5 * logvar); }
};

// z = mu + sigma * epsilon, differentiable in mu and sigma.
torch::Tensor sample_latent(const LatentGaussian& g, const torch::Tensor& epsilon);

// 0.5 * sum_i (mu_i^2 + sigma_i^2 - log sigma_i^2 - 1) over the last dimension.
torch::Tensor kl_to_standard_normal(const LatentGaussian& g);

struct DiscriminatorOutput {
  torch::Tensor probs;  // N x C, rows sum to 1
  torch::Tensor kl;     // scalar batch mean; zero for the fc latent
  LatentGaussian latent;
};

// Skill embedding (num_domain_frames * n) -> latent -> task distribution over C
// classes. Training-only network.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  DiscriminatorImpl(const DiscriminatorConfig& config, int input_dim);

  // Throws ShapeError when the skill width does not match input_dim.
  LatentGaussian encode_latent(const torch::Tensor& skills);
  torch::Tensor classify(const torch::Tensor& z);  // softmax probabilities

  // With epsilon omitted, a standard-normal draw is taken in training mode and
  // epsilon = 0 (z = mu) in eval mode.
  DiscriminatorOutput forward(const torch::Tensor& skills, std::optional<torch::Tensor> epsilon = std::nullopt);

  const DiscriminatorConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }

  torch::nn::Linear latent_head() { return latent_out_; }
  torch::nn::Linear class_head() { return class_out_; }

 private:
  DiscriminatorConfig config_;
  int input_dim_;
  torch::nn::Linear latent_in_{nullptr}, latent_out_{nullptr};
  torch::nn::Linear class_in_{nullptr}, class_out_{nullptr};
};
TORCH_MODULE(Discriminator);

}  // namespace asn
