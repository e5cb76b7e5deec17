// SPDX-License-Identifier: Apache-2.0
#include "asn/discriminator.hpp"

#include "asn/errors.hpp"

namespace asn {

torch::Tensor sample_latent(const LatentGaussian& g, const torch::Tensor& epsilon) {
  return g.mu + g.sigma() * epsilon;
}

torch::Tensor kl_to_standard_normal(const LatentGaussian& g) {
  return 0.5 * (g.mu.pow(2) + g.logvar.exp() - g.logvar - 1.0).sum(-1);
}

DiscriminatorImpl::DiscriminatorImpl(const DiscriminatorConfig& config, int input_dim)
    : config_(config), input_dim_(input_dim) {
  const int k = config_.latent_dim;
  const int out = config_.latent == LatentMode::kl ? 2 * k : k;
  latent_in_ = register_module("latent_in", torch::nn::Linear(input_dim_, config_.hidden));
  latent_out_ = register_module("latent_out", torch::nn::Linear(config_.hidden, out));
  class_in_ = register_module("class_in", torch::nn::Linear(k, config_.hidden));
  class_out_ = register_module("class_out", torch::nn::Linear(config_.hidden, config_.num_classes));
}

LatentGaussian DiscriminatorImpl::encode_latent(const torch::Tensor& skills) {
  if (skills.dim() < 1 || skills.size(-1) != input_dim_) {
    throw ShapeError("discriminator expects skill width " + std::to_string(input_dim_) + ", got " +
                     c10::str(skills.sizes()));
  }
  auto h = latent_out_(torch::relu(latent_in_(skills)));
  if (config_.latent == LatentMode::fc) {
    return {h, torch::zeros_like(h)};
  }
  auto parts = h.chunk(2, -1);
  return {parts[0], parts[1]};
}

torch::Tensor DiscriminatorImpl::classify(const torch::Tensor& z) {
  auto h = torch::relu(class_in_(z));
  h = torch::dropout(h, config_.dropout, is_training());
  return torch::softmax(class_out_(h), -1);
}

DiscriminatorOutput DiscriminatorImpl::forward(const torch::Tensor& skills, std::optional<torch::Tensor> epsilon) {
  DiscriminatorOutput out;
  out.latent = encode_latent(skills);
  torch::Tensor z;
  if (config_.latent == LatentMode::fc) {
    z = out.latent.mu;
    out.kl = torch::zeros({}, skills.options());
  } else {
    torch::Tensor eps = epsilon ? *epsilon
                                : (is_training() ? torch::randn_like(out.latent.mu) : torch::zeros_like(out.latent.mu));
    z = sample_latent(out.latent, eps);
    out.kl = kl_to_standard_normal(out.latent).mean();
  }
  out.probs = classify(z);
  return out;
}

}  // namespace asn
