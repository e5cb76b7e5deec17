// SPDX-License-Identifier: Apache-2.0
#include "asn/dataio/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "asn/dataio/augment.hpp"
#include "asn/dataio/tensor.hpp"
#include "asn/errors.hpp"

namespace asn::dataio {

MultiViewBatch sample_metric_batch(const MultiTaskDataset& dataset, const BatchSpec& spec, Rng& rng,
                                   const AugmentConfig& augment_config) {
  if (spec.view_pairs < 1 || spec.frames < 2 || spec.frames % (2 * spec.view_pairs) != 0) {
    throw SamplingError("batch of " + std::to_string(spec.frames) + " frames cannot be split evenly over " +
                        std::to_string(spec.view_pairs) + " view pairs");
  }
  const int per_pair = spec.frames / (2 * spec.view_pairs);
  std::vector<int> eligible;
  for (int i = 0; i < static_cast<int>(dataset.size()); ++i) {
    if (dataset.demonstrations[i].length() >= per_pair) eligible.push_back(i);
  }
  if (static_cast<int>(eligible.size()) < spec.view_pairs) {
    throw SamplingError("dataset has " + std::to_string(eligible.size()) + " demonstrations with >= " +
                        std::to_string(per_pair) + " frames; batch needs " + std::to_string(spec.view_pairs));
  }
  // Partial Fisher-Yates: the first view_pairs entries are a uniform sample.
  for (int i = 0; i < spec.view_pairs; ++i) {
    const int j = uniform_int(rng, i, static_cast<int>(eligible.size()) - 1);
    std::swap(eligible[i], eligible[j]);
  }

  MultiViewBatch batch;
  batch.frames.reserve(spec.frames);
  for (int p = 0; p < spec.view_pairs; ++p) {
    const Demonstration& demo = dataset.demonstrations[eligible[p]];
    const int length = demo.length();
    // One mirror draw per view pair: positives must stay geometrically comparable.
    const bool mirror = augment_config.enabled && bernoulli(rng, augment_config.mirror_prob);
    for (int s = 0; s < per_pair; ++s) {
      const int lo = s * length / per_pair;
      const int hi = (s + 1) * length / per_pair - 1;
      const int t = uniform_int(rng, lo, std::max(lo, hi));
      const int label = p * per_pair + s;
      for (int v = 0; v < 2; ++v) {
        if (augment_config.enabled) {
          AugmentParams params = draw_augment_params(rng, augment_config);
          params.mirror = mirror;
          batch.frames.push_back(apply_augment(demo.views[v][t], params));
        } else {
          batch.frames.push_back(demo.views[v][t]);
        }
        batch.anchor_labels.push_back(label);
        batch.source_pair_ids.push_back(p);
        batch.time_indices.push_back(t);
        batch.demo_indices.push_back(eligible[p]);
      }
    }
  }
  batch.images = to_tensor(batch.frames);
  return batch;
}

int max_skill_start(const SkillFrameSpec& spec, int length) {
  return length - 1 - (spec.num_domain_frames - 1) * spec.stride;
}

std::vector<SkillTuple> sample_skill_pairs(const MultiTaskDataset& dataset, const SkillFrameSpec& spec, int count,
                                           bool success_only, Rng& rng) {
  if (spec.num_domain_frames < 1 || spec.stride < 1) throw SamplingError("invalid skill frame spec");
  std::vector<int> eligible;
  for (int i = 0; i < static_cast<int>(dataset.size()); ++i) {
    const Demonstration& demo = dataset.demonstrations[i];
    if (success_only && !demo.success) continue;
    if (spec.num_domain_frames > 1 && spec.num_domain_frames * spec.stride >= demo.length()) continue;
    if (max_skill_start(spec, demo.length()) < 0) continue;
    eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw SamplingError(success_only ? "no successful demonstration is long enough for the skill spec"
                                     : "no demonstration is long enough for the skill spec");
  }
  std::vector<SkillTuple> tuples;
  tuples.reserve(count);
  for (int n = 0; n < count; ++n) {
    SkillTuple tuple;
    tuple.demo_index = eligible[uniform_int(rng, 0, static_cast<int>(eligible.size()) - 1)];
    const Demonstration& demo = dataset.demonstrations[tuple.demo_index];
    tuple.view = uniform_int(rng, 0, 1);
    tuple.start = uniform_int(rng, 0, max_skill_start(spec, demo.length()));
    for (int k = 0; k < spec.num_domain_frames; ++k) {
      tuple.frames.push_back(demo.views[tuple.view][tuple.start + k * spec.stride]);
    }
    tuples.push_back(std::move(tuple));
  }
  return tuples;
}

torch::Tensor skill_tensor(const std::vector<SkillTuple>& tuples, Rng& rng, const AugmentConfig& augment_config) {
  std::vector<Frame> frames;
  for (const auto& tuple : tuples) {
    const AugmentParams params = draw_augment_params(rng, augment_config);
    for (const auto& f : tuple.frames) {
      frames.push_back(augment_config.enabled ? apply_augment(f, params) : f);
    }
  }
  return to_tensor(frames);
}

}  // namespace asn::dataio
