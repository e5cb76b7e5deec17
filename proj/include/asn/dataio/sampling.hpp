// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

#include <vector>

#include "asn/config.hpp"
#include "asn/dataio/dataset.hpp"
#include "asn/random.hpp"

namespace asn::dataio {

// Frames for the metric loss. Frames sharing a label are the two views of one
// demonstration at one time index; labels never repeat across demonstrations.
struct MultiViewBatch {
  std::vector<Frame> frames;          // augmented raw frames
  torch::Tensor images;               // normalized, M x 3 x H x W
  std::vector<int> anchor_labels;
  std::vector<int> source_pair_ids;   // batch-local view-pair index
  std::vector<int> time_indices;
  std::vector<int> demo_indices;      // index into the sampled dataset
};

// Picks `view_pairs` distinct demonstrations. Each contributes
// frames / (2 * view_pairs) time indices, one drawn from each of that many
// equal-width strata of [0, F), and both views at every index. Photometric
// jitter is drawn per frame; the mirror flip once per view pair.
MultiViewBatch sample_metric_batch(const MultiTaskDataset& dataset, const BatchSpec& spec, Rng& rng,
                                   const AugmentConfig& augment);

struct SkillTuple {
  int demo_index = 0;
  int view = 0;
  int start = 0;
  std::vector<Frame> frames;  // at start, start + stride, ...
};

// Valid first indices for `spec` on a demonstration of length F: [0, F-1-(k-1)*stride].
int max_skill_start(const SkillFrameSpec& spec, int length);

// Raw (unaugmented) tuples from one view of one demonstration each. With
// success_only, only successful demonstrations are eligible.
std::vector<SkillTuple> sample_skill_pairs(const MultiTaskDataset& dataset, const SkillFrameSpec& spec, int count,
                                           bool success_only, Rng& rng);

// Augments each tuple with one shared parameter draw and normalizes to a
// (count * k) x 3 x H x W tensor, tuple-major.
torch::Tensor skill_tensor(const std::vector<SkillTuple>& tuples, Rng& rng, const AugmentConfig& augment);

}  // namespace asn::dataio
