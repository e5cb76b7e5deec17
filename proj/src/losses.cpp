// SPDX-License-Identifier: Apache-2.0
#include "asn/losses.hpp"

#include <limits>

#include "asn/errors.hpp"

namespace asn::losses {
namespace {

torch::Tensor to_long(const std::vector<int>& v) {
  return torch::tensor(std::vector<std::int64_t>(v.begin(), v.end()), torch::kLong);
}

torch::Tensor neg_inf_like(const torch::Tensor& t) {
  return torch::full_like(t, -std::numeric_limits<double>::infinity());
}

// Row-wise log-sum-exp over masked entries; rows with no entry give 0 (and are
// reported through `has_any`).
torch::Tensor masked_logsumexp(const torch::Tensor& values, const torch::Tensor& mask, torch::Tensor& has_any) {
  has_any = mask.any(1);
  auto filled = torch::where(mask, values, neg_inf_like(values));
  filled = torch::where(has_any.unsqueeze(1), filled, torch::zeros_like(filled));
  return torch::where(has_any, torch::logsumexp(filled, 1), torch::zeros({}, values.options()));
}

void check_size(const torch::Tensor& embeddings, const PairStructure& pairs) {
  const auto m = static_cast<std::size_t>(embeddings.size(0));
  if (embeddings.dim() != 2 || pairs.labels.size() != m || (!pairs.groups.empty() && pairs.groups.size() != m) ||
      (!pairs.times.empty() && pairs.times.size() != m)) {
    throw ShapeError("metric loss: embeddings and pair structure disagree in size");
  }
}

}  // namespace

PairMasks pair_masks(const PairStructure& pairs) {
  const auto m = static_cast<std::int64_t>(pairs.labels.size());
  auto labels = to_long(pairs.labels);
  auto same_label = labels.unsqueeze(0) == labels.unsqueeze(1);
  auto eye = torch::eye(m, torch::kBool);
  PairMasks masks;
  masks.positive = same_label & ~eye;
  auto negative = ~same_label;
  if (!pairs.groups.empty()) {
    auto groups = to_long(pairs.groups);
    negative = negative & (groups.unsqueeze(0) == groups.unsqueeze(1));
  }
  if (!pairs.times.empty() && pairs.negative_margin > 0) {
    auto times = to_long(pairs.times);
    negative = negative & ((times.unsqueeze(0) - times.unsqueeze(1)).abs() >= pairs.negative_margin);
  }
  masks.negative = negative;
  return masks;
}

torch::Tensor similarity_matrix(const torch::Tensor& embeddings, Similarity kind) {
  if (kind == Similarity::dot) return embeddings.matmul(embeddings.t());
  auto diff = embeddings.unsqueeze(1) - embeddings.unsqueeze(0);
  return -diff.pow(2).sum(-1);
}

torch::Tensor lifted_asn_loss(const torch::Tensor& embeddings, const PairStructure& pairs, const LossConfig& cfg,
                              bool bounded) {
  check_size(embeddings, pairs);
  const PairMasks masks = pair_masks(pairs);
  const auto s = similarity_matrix(embeddings, cfg.similarity);

  // Positive term: exp(lambda - S) plus the bound S * [S > xi], both as exponents.
  auto attract = cfg.lambda_margin - s;
  torch::Tensor pos_values = attract;
  torch::Tensor pos_mask = masks.positive;
  if (bounded) {
    auto trigger = masks.positive & (s > cfg.xi_sim) & (s > 0);
    auto log_bound = torch::log(torch::where(trigger, s, torch::ones_like(s)));
    pos_values = torch::cat({attract, log_bound}, 1);
    pos_mask = torch::cat({masks.positive, trigger}, 1);
  }
  torch::Tensor has_pos, has_neg;
  auto pos_term = masked_logsumexp(pos_values, pos_mask, has_pos);
  auto neg_term = masked_logsumexp(s, masks.negative, has_neg);
  if (!(has_pos & has_neg).any().item<bool>()) throw DegenerateBatchError();
  return (pos_term + neg_term).sum();
}

torch::Tensor lifted_asn_loss(const torch::Tensor& embeddings, std::span<const int> labels, const LossConfig& cfg) {
  PairStructure pairs;
  pairs.labels.assign(labels.begin(), labels.end());
  return lifted_asn_loss(embeddings, pairs, cfg, cfg.variant != MetricVariant::lifted);
}

torch::Tensor triplet_loss(const torch::Tensor& embeddings, const PairStructure& pairs, const LossConfig& cfg) {
  check_size(embeddings, pairs);
  const PairMasks masks = pair_masks(pairs);
  auto d = -similarity_matrix(embeddings, Similarity::neg_sq_euclidean);
  // valid[i][p][n]
  auto valid = masks.positive.unsqueeze(2) & masks.negative.unsqueeze(1);
  const auto count = valid.sum().item<std::int64_t>();
  if (count == 0) throw DegenerateBatchError();
  auto hinge = torch::relu(d.unsqueeze(2) - d.unsqueeze(1) + cfg.triplet_margin);
  return torch::where(valid, hinge, torch::zeros_like(hinge)).sum() / static_cast<double>(count);
}

torch::Tensor npair_loss(const torch::Tensor& embeddings, const PairStructure& pairs, const LossConfig& cfg) {
  check_size(embeddings, pairs);
  const PairMasks masks = pair_masks(pairs);
  auto s = similarity_matrix(embeddings, cfg.similarity);
  // logits[i][p][n] = S_in - S_ip
  auto logits = s.unsqueeze(1) - s.unsqueeze(2);
  auto neg = masks.negative.unsqueeze(1).expand_as(logits);
  auto filled = torch::where(neg, logits, neg_inf_like(logits));
  // log(1 + sum exp(x)) = logsumexp over {0} U x
  auto with_zero = torch::cat({torch::zeros_like(filled.narrow(2, 0, 1)), filled}, 2);
  auto per_pair = torch::logsumexp(with_zero, 2);
  auto valid = masks.positive & masks.negative.any(1).unsqueeze(1);
  const auto count = valid.sum().item<std::int64_t>();
  if (count == 0) throw DegenerateBatchError();
  return torch::where(valid, per_pair, torch::zeros_like(per_pair)).sum() / static_cast<double>(count);
}

torch::Tensor metric_loss(const torch::Tensor& embeddings, const PairStructure& pairs, const LossConfig& cfg) {
  switch (cfg.variant) {
    case MetricVariant::lifted_asn: return lifted_asn_loss(embeddings, pairs, cfg, true);
    case MetricVariant::lifted: return lifted_asn_loss(embeddings, pairs, cfg, false);
    case MetricVariant::triplet: return triplet_loss(embeddings, pairs, cfg);
    case MetricVariant::npair: return npair_loss(embeddings, pairs, cfg);
  }
  return lifted_asn_loss(embeddings, pairs, cfg, true);
}

namespace {
torch::Tensor row_entropy(const torch::Tensor& p) {
  // 0 log 0 = 0; the clamp keeps the gradient finite at p = 0.
  return -(p * torch::log(p.clamp_min(1e-30))).sum(-1);
}
}  // namespace

torch::Tensor conditional_entropy(const torch::Tensor& probs) { return row_entropy(probs).mean(); }

torch::Tensor marginal_entropy(const torch::Tensor& probs) { return row_entropy(probs.mean(0)); }

torch::Tensor discriminator_loss(const torch::Tensor& probs, const torch::Tensor& kl, const LossConfig& cfg) {
  auto loss = cfg.beta * kl;
  if (cfg.discriminator_entropy) loss = loss - marginal_entropy(probs) + conditional_entropy(probs);
  return loss;
}

torch::Tensor encoder_loss(const torch::Tensor& probs, const torch::Tensor& lifted, const LossConfig& cfg) {
  auto loss = -cfg.alpha * lifted;
  if (cfg.encoder_entropy) loss = loss + marginal_entropy(probs) + conditional_entropy(probs);
  return loss;
}

}  // namespace asn::losses
