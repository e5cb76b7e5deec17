// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

#include <span>
#include <vector>

#include "asn/config.hpp"

namespace asn::losses {

// Which pairs of a metric batch attract and which repel. Positives share a
// label. Negatives carry a different label, come from the same group (view
// pair) and lie at least `negative_margin` frames from the anchor. Empty
// `groups` puts every frame in one group; empty `times` disables the margin.
struct PairStructure {
  std::vector<int> labels;
  std::vector<int> groups;
  std::vector<int> times;
  int negative_margin = 0;
};

struct PairMasks {
  torch::Tensor positive;  // M x M bool, diagonal excluded
  torch::Tensor negative;  // M x M bool
};

PairMasks pair_masks(const PairStructure& pairs);

// S_ij = e_i . e_j, or -|e_i - e_j|^2 for the squared-Euclidean variant.
torch::Tensor similarity_matrix(const torch::Tensor& embeddings, Similarity kind);

// Sum over anchors of
//   log sum_{pos k} (exp(lambda - S_ik) + [S_ik > xi] S_ik) + log sum_{neg k} exp(S_ik),
// evaluated as log-sum-exp. `bounded = false` drops the [S_ik > xi] term
// (the plain lifted variant). Anchors without positives (negatives) skip the
// first (second) log term; throws DegenerateBatchError when no anchor has both.
torch::Tensor lifted_asn_loss(const torch::Tensor& embeddings, const PairStructure& pairs, const LossConfig& cfg,
                              bool bounded = true);

// All frames with a different label are negatives.
torch::Tensor lifted_asn_loss(const torch::Tensor& embeddings, std::span<const int> labels, const LossConfig& cfg);

// Mean hinge over (anchor, positive, negative): max(0, d_ap - d_an + margin), d = squared distance.
torch::Tensor triplet_loss(const torch::Tensor& embeddings, const PairStructure& pairs, const LossConfig& cfg);

// Mean over (anchor, positive) of log(1 + sum_neg exp(S_an - S_ap)).
torch::Tensor npair_loss(const torch::Tensor& embeddings, const PairStructure& pairs, const LossConfig& cfg);

// Dispatches on cfg.variant.
torch::Tensor metric_loss(const torch::Tensor& embeddings, const PairStructure& pairs, const LossConfig& cfg);

// Mean row entropy (natural log) of an N x C probability matrix; 0 log 0 = 0.
torch::Tensor conditional_entropy(const torch::Tensor& probs);

// Entropy of the row-mean distribution.
torch::Tensor marginal_entropy(const torch::Tensor& probs);

// -H_marg + H_cond + beta * KL. Entropy terms drop out when
// cfg.discriminator_entropy is false.
torch::Tensor discriminator_loss(const torch::Tensor& probs, const torch::Tensor& kl, const LossConfig& cfg);

// H_marg + H_cond - alpha * lifted, to be maximized. Entropy terms drop out
// when cfg.encoder_entropy is false.
torch::Tensor encoder_loss(const torch::Tensor& probs, const torch::Tensor& lifted, const LossConfig& cfg);

}  // namespace asn::losses
