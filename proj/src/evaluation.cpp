// SPDX-License-Identifier: Apache-2.0
#include "asn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "asn/checkpoint.hpp"
#include "asn/errors.hpp"
#include "asn/plot.hpp"
#include "asn/stats.hpp"

namespace asn::eval {
namespace fs = std::filesystem;
namespace {

std::vector<std::vector<double>> to_rows(const torch::Tensor& t) {
  if (t.dim() != 2) throw ShapeError("expected a 2-D embedding tensor, got " + std::to_string(t.dim()) + " dims");
  auto d = t.detach().to(torch::kCPU, torch::kDouble).contiguous();
  const auto rows = d.size(0), cols = d.size(1);
  const double* p = d.data_ptr<double>();
  std::vector<std::vector<double>> out(rows, std::vector<double>(cols));
  for (std::int64_t r = 0; r < rows; ++r) std::copy(p + r * cols, p + (r + 1) * cols, out[r].begin());
  return out;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

AlignmentResult alignment_loss(const torch::Tensor& view1, const torch::Tensor& view2) {
  const auto a = to_rows(view1);
  const auto b = to_rows(view2);
  if (a.size() != b.size()) {
    throw ShapeError("alignment needs synchronized views: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + " frames");
  }
  if (a.empty()) throw ShapeError("alignment of empty sequences");
  if (a[0].size() != b[0].size()) throw ShapeError("alignment embeddings differ in dimension");
  const auto f = static_cast<int>(a.size());
  AlignmentResult out;
  out.nn_indices.resize(f);
  double total = 0;
  for (int j = 0; j < f; ++j) {
    int best = 0;
    double best_d = squared_distance(a[j], b[0]);
    for (int i = 1; i < f; ++i) {
      const double d = squared_distance(a[j], b[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    out.nn_indices[j] = best;
    total += std::abs(j - best) / static_cast<double>(f);
  }
  out.value = total / f;
  return out;
}

AlignmentReport evaluate_transfer(Encoder& encoder, const dataio::MultiTaskDataset& dataset,
                                  const std::vector<std::string>& tasks) {
  const auto selected = tasks.empty() ? dataset : dataset.select_tasks(tasks);
  if (selected.empty()) throw SamplingError("evaluation split is empty");
  AlignmentReport report;
  for (const auto& demo : selected.demonstrations) {
    const auto e0 = embed_sequence(encoder, demo.views[0]);
    const auto e1 = embed_sequence(encoder, demo.views[1]);
    const auto fwd = alignment_loss(e0, e1);
    const auto bwd = alignment_loss(e1, e0);
    VideoAlignment v;
    v.demo_id = demo.demo_id;
    v.forward = fwd.value;
    v.backward = bwd.value;
    v.value = 0.5 * (fwd.value + bwd.value);
    v.nn_trace = fwd.nn_indices;
    report.per_video.push_back(std::move(v));
  }
  const double n = static_cast<double>(report.per_video.size());
  for (const auto& v : report.per_video) {
    report.mean += v.value / n;
    report.mean_forward += v.forward / n;
    report.mean_backward += v.backward / n;
  }
  return report;
}

AlignmentReport evaluate_transfer(const fs::path& checkpoint, const dataio::MultiTaskDataset& dataset,
                                  const std::vector<std::string>& tasks) {
  Encoder encoder = load_encoder(checkpoint);
  return evaluate_transfer(encoder, dataset, tasks);
}

void write_report(const AlignmentReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream records(dir / "alignment.jsonl");
  for (const auto& v : report.per_video) {
    nlohmann::json j = {{"demo_id", v.demo_id},   {"alignment", v.value}, {"forward", v.forward},
                        {"backward", v.backward}, {"nn_trace", v.nn_trace}};
    records << j.dump() << '\n';
  }
  std::ofstream summary(dir / "summary.txt");
  summary << "videos: " << report.per_video.size() << '\n'
          << "alignment (mean of both directions): " << report.mean << '\n'
          << "view0 -> view1: " << report.mean_forward << '\n'
          << "view1 -> view0: " << report.mean_backward << '\n';
  if (!records || !summary) throw Error("cannot write alignment report to " + dir.string());
}

std::vector<std::array<double, 2>> tsne(const std::vector<std::vector<double>>& points, const TsneOptions& options) {
  const auto n = static_cast<int>(points.size());
  if (n < 2) throw ShapeError("t-SNE needs at least two points");
  const double perplexity = std::min(options.perplexity, (n - 1) / 3.0);

  // Input affinities: per-point Gaussian bandwidth found by bisection on entropy.
  std::vector<double> d2(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d2[i * n + j] = squared_distance(points[i], points[j]);
  std::vector<double> p(static_cast<std::size_t>(n) * n, 0.0);
  const double target = std::log(std::max(perplexity, 1.0));
  for (int i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double dmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, d2[i * n + j]);
    for (int it = 0; it < 200; ++it) {
      double sum = 0, weighted = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = std::exp(-beta * (d2[i * n + j] - dmin));
        p[i * n + j] = w;
        sum += w;
        weighted += w * (d2[i * n + j] - dmin);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      for (int j = 0; j < n; ++j) p[i * n + j] /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2 : (beta + hi) / 2;
      } else {
        hi = beta;
        beta = (beta + lo) / 2;
      }
    }
  }
  std::vector<double> pj(p.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pj[i * n + j] = std::max((p[i * n + j] + p[j * n + i]) / (2.0 * n), 1e-12);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1e-4);
  std::vector<std::array<double, 2>> y(n), update(n), gains(n, {1.0, 1.0});
  for (auto& v : y) v = {normal(rng), normal(rng)};
  for (auto& u : update) u = {0.0, 0.0};

  const int exaggeration_iters = std::min(250, options.iterations / 3);
  const double learning_rate = std::max(n / 12.0, 50.0);
  std::vector<double> q(static_cast<std::size_t>(n) * n);
  for (int iter = 0; iter < options.iterations; ++iter) {
    const double exaggeration = iter < exaggeration_iters ? 12.0 : 1.0;
    const double momentum = iter < exaggeration_iters ? 0.5 : 0.8;
    double qsum = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) {
          q[i * n + j] = 0;
          continue;
        }
        const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
        q[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
        qsum += q[i * n + j];
      }
    }
    for (int i = 0; i < n; ++i) {
      std::array<double, 2> grad{0.0, 0.0};
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double mult = (exaggeration * pj[i * n + j] - q[i * n + j] / qsum) * q[i * n + j];
        grad[0] += 4.0 * mult * (y[i][0] - y[j][0]);
        grad[1] += 4.0 * mult * (y[i][1] - y[j][1]);
      }
      for (int c = 0; c < 2; ++c) {
        const bool same_sign = (grad[c] > 0) == (update[i][c] > 0);
        gains[i][c] = std::max(same_sign ? gains[i][c] * 0.8 : gains[i][c] + 0.2, 0.01);
        update[i][c] = momentum * update[i][c] - learning_rate * gains[i][c] * grad[c];
      }
    }
    std::array<double, 2> centre{0.0, 0.0};
    for (int i = 0; i < n; ++i) {
      y[i][0] += update[i][0];
      y[i][1] += update[i][1];
      centre[0] += y[i][0] / n;
      centre[1] += y[i][1] / n;
    }
    for (auto& v : y) {
      v[0] -= centre[0];
      v[1] -= centre[1];
    }
  }
  return y;
}

double curve_order_correlation(const std::vector<std::array<double, 2>>& points) {
  const auto n = points.size();
  if (n < 3) throw ShapeError("curve order needs at least three points");
  auto dist = [&](std::size_t a, std::size_t b) {
    return std::hypot(points[a][0] - points[b][0], points[a][1] - points[b][1]);
  };
  // Arc length is approximated by geodesic distance on the symmetric k-NN graph.
  const std::size_t k = std::min<std::size_t>(4, n - 1);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> g(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist(i, a) < dist(i, b); });
    g[i][i] = 0.0;
    for (std::size_t r = 1; r <= k; ++r) {
      const auto j = order[r];
      g[i][j] = g[j][i] = dist(i, j);
    }
  }
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i][j] = std::min(g[i][j], g[i][m] + g[m][j]);
  // Disconnected pieces fall back to straight-line distance.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (g[i][j] == inf) g[i][j] = dist(i, j);

  // Endpoint of the geodesic diameter by a double sweep.
  auto farthest = [&](std::size_t from) {
    return static_cast<std::size_t>(std::max_element(g[from].begin(), g[from].end()) - g[from].begin());
  };
  const std::size_t start = farthest(farthest(0));
  std::vector<double> position(g[start].begin(), g[start].end()), time(n);
  std::iota(time.begin(), time.end(), 0.0);
  return std::abs(stats::spearman(position, time));
}

TrajectoryPlot trajectory_from_embeddings(const torch::Tensor& embeddings, const TsneOptions& options) {
  const auto rows = to_rows(embeddings);
  if (rows.size() < 5) throw ShapeError("trajectory plot needs at least 5 frames, got " + std::to_string(rows.size()));
  TrajectoryPlot plot;
  plot.points = tsne(rows, options);
  const double last = static_cast<double>(rows.size() - 1);
  for (std::size_t t = 0; t < rows.size(); ++t) plot.progress.push_back(static_cast<double>(t) / last);
  return plot;
}

void write_trajectory_plot(const TrajectoryPlot& plot, const fs::path& out_path) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& p : plot.points) {
    x0 = std::min(x0, p[0]);
    x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]);
    y1 = std::max(y1, p[1]);
  }
  const double px = 0.05 * (x1 - x0) + 1e-9, py = 0.05 * (y1 - y0) + 1e-9;
  plot::Canvas canvas(480, 480, x0 - px, x1 + px, y0 - py, y1 + py);
  for (std::size_t i = 1; i < plot.points.size(); ++i) {
    canvas.line(plot.points[i - 1][0], plot.points[i - 1][1], plot.points[i][0], plot.points[i][1], {210, 210, 210});
  }
  for (std::size_t i = 0; i < plot.points.size(); ++i) {
    canvas.dot(plot.points[i][0], plot.points[i][1], 5, plot::colormap(plot.progress[i]));
  }
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  dataio::write_png(canvas.raster(), out_path);
  std::ofstream csv(out_path.string() + ".csv");
  csv.precision(17);
  csv << "frame,progress,x,y\n";
  for (std::size_t i = 0; i < plot.points.size(); ++i) {
    csv << i << ',' << plot.progress[i] << ',' << plot.points[i][0] << ',' << plot.points[i][1] << '\n';
  }
}

TrajectoryPlot emit_trajectory_plot(Encoder& encoder, const dataio::Demonstration& demo, const fs::path& out_path,
                                    const TsneOptions& options, int view) {
  if (demo.length() < 5) {
    throw ShapeError("demonstration " + demo.demo_id + " has " + std::to_string(demo.length()) +
                     " frames; trajectory plot needs at least 5");
  }
  const auto plot = trajectory_from_embeddings(embed_sequence(encoder, demo.views.at(view)), options);
  write_trajectory_plot(plot, out_path);
  return plot;
}

RewardCurve reward_series(const torch::Tensor& frame_embeddings, const torch::Tensor& goal_embedding) {
  const auto rows = to_rows(frame_embeddings);
  const auto goal = to_rows(goal_embedding.reshape({1, -1}))[0];
  RewardCurve curve;
  std::vector<double> raw;
  for (const auto& r : rows) {
    if (r.size() != goal.size()) throw ShapeError("goal embedding dimension mismatch");
    raw.push_back(-std::sqrt(squared_distance(r, goal)));
  }
  if (raw.empty()) return curve;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double range = *hi - *lo;
  if (!(range > 1e-12)) {
    curve.degenerate = true;
    curve.warning = "reward curve is constant; emitting a flat 0.5 series";
    curve.series.assign(raw.size(), 0.5);
    return curve;
  }
  for (double v : raw) curve.series.push_back((v - *lo) / range);
  return curve;
}

void write_reward_plot(const std::vector<double>& series, const fs::path& out_path) {
  const double last = std::max<double>(1.0, static_cast<double>(series.size()) - 1);
  plot::Canvas canvas(640, 360, 0.0, last, 0.0, 1.0);
  canvas.axes();
  std::vector<double> xs;
  for (std::size_t t = 0; t < series.size(); ++t) xs.push_back(static_cast<double>(t));
  canvas.polyline(xs, series, {31, 119, 180}, 3);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  dataio::write_png(canvas.raster(), out_path);
  std::ofstream csv(out_path.string() + ".csv");
  csv.precision(17);
  csv << "frame,reward\n";
  for (std::size_t t = 0; t < series.size(); ++t) csv << t << ',' << series[t] << '\n';
}

RewardCurve emit_reward_curve(Encoder& encoder, const dataio::Demonstration& demo, const dataio::Frame& goal_frame,
                              const fs::path& out_path, int view) {
  auto curve = reward_series(embed_sequence(encoder, demo.views.at(view)), embed(encoder, goal_frame));
  if (curve.degenerate) std::cerr << "warning: " << demo.demo_id << ": " << curve.warning << '\n';
  write_reward_plot(curve.series, out_path);
  return curve;
}

}  // namespace asn::eval
