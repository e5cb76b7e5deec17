// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "asn/dataio/dataset.hpp"
#include "asn/encoder.hpp"

namespace asn::eval {

struct AlignmentResult {
  double value = 0.0;
  std::vector<int> nn_indices;  // per frame of the first view
};

// For each frame j of `view1` (F x n), find the Euclidean nearest neighbour
// among the rows of `view2` (ties go to the smallest index) and return
// (1/F) * sum_j |j - nn_j| / F.
AlignmentResult alignment_loss(const torch::Tensor& view1, const torch::Tensor& view2);

struct VideoAlignment {
  std::string demo_id;
  double forward = 0.0;   // view 0 -> view 1
  double backward = 0.0;  // view 1 -> view 0
  double value = 0.0;     // mean of both directions
  std::vector<int> nn_trace;
};

struct AlignmentReport {
  std::vector<VideoAlignment> per_video;
  double mean = 0.0;
  double mean_forward = 0.0;
  double mean_backward = 0.0;
};

// Embeds both views of every demonstration whose task is in `tasks` (all when
// empty). Task names are read only for this selection. Throws on an empty selection.
AlignmentReport evaluate_transfer(Encoder& encoder, const dataio::MultiTaskDataset& dataset,
                                  const std::vector<std::string>& tasks = {});
AlignmentReport evaluate_transfer(const std::filesystem::path& checkpoint, const dataio::MultiTaskDataset& dataset,
                                  const std::vector<std::string>& tasks = {});

// alignment.jsonl (one record per video) and summary.txt.
void write_report(const AlignmentReport& report, const std::filesystem::path& dir);

struct TsneOptions {
  double perplexity = 10.0;
  int iterations = 750;
  std::uint64_t seed = 0;
};

// Exact t-SNE to two dimensions. Deterministic for a given seed.
std::vector<std::array<double, 2>> tsne(const std::vector<std::vector<double>>& points, const TsneOptions& options);

// |Spearman| between time and arc-length position (geodesic distance on the
// 4-NN graph from one end of the projected cloud); 1 for a time-ordered curve.
double curve_order_correlation(const std::vector<std::array<double, 2>>& points);

struct TrajectoryPlot {
  std::vector<std::array<double, 2>> points;
  std::vector<double> progress;  // t / (F - 1)
};

// t-SNE of one view of `demo`, drawn as a scatter colored by temporal progress.
// Writes `out_path` (PNG) and `out_path`.csv with the point data. Needs >= 5 frames.
TrajectoryPlot emit_trajectory_plot(Encoder& encoder, const dataio::Demonstration& demo,
                                    const std::filesystem::path& out_path, const TsneOptions& options, int view = 0);
TrajectoryPlot trajectory_from_embeddings(const torch::Tensor& embeddings, const TsneOptions& options);
void write_trajectory_plot(const TrajectoryPlot& plot, const std::filesystem::path& out_path);

struct RewardCurve {
  std::vector<double> series;
  bool degenerate = false;  // constant distances; series is flat 0.5
  std::string warning;
};

// series_t = -|e_t - goal|, min-max normalized to [0, 1].
RewardCurve reward_series(const torch::Tensor& frame_embeddings, const torch::Tensor& goal_embedding);

// Reward of every frame of one view of `demo` against `goal_frame`.
RewardCurve emit_reward_curve(Encoder& encoder, const dataio::Demonstration& demo, const dataio::Frame& goal_frame,
                              const std::filesystem::path& out_path, int view = 0);
void write_reward_plot(const std::vector<double>& series, const std::filesystem::path& out_path);

}  // namespace asn::eval
