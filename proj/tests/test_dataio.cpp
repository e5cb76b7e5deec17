// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>

#include "asn/dataio/augment.hpp"
#include "asn/dataio/dataset.hpp"
#include "asn/dataio/sampling.hpp"
#include "asn/dataio/synthetic.hpp"
#include "asn/dataio/tensor.hpp"
#include "asn/errors.hpp"

using namespace asn;
using namespace asn::dataio;
namespace fs = std::filesystem;

namespace {

GeneratorConfig small_generator(std::vector<std::string> tasks, int demos) {
  GeneratorConfig g;
  g.tasks = std::move(tasks);
  g.demos_per_task = demos;
  g.frames_per_demo = 20;
  g.image_size = 32;
  return g;
}

const MultiTaskDataset& small_dataset() {
  static const MultiTaskDataset ds = generate_synthetic_dataset(small_generator({"stack", "color_push"}, 4), 3);
  return ds;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Image gradient_image(int size) {
  Image img(size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c)
      for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = static_cast<std::uint8_t>((r * 7 + c * 3 + ch * 50) % 251);
  return img;
}

}  // namespace

TEST(Synthetic, CountsAndFailures) {
  auto g = small_generator({"stack"}, 4);
  const auto ds = generate_synthetic_dataset(g, 7);
  ASSERT_EQ(ds.size(), 4u);
  int failures = 0;
  for (const auto& d : ds.demonstrations) failures += !d.success;
  EXPECT_EQ(failures, 2);
}

TEST(Synthetic, UnsuccessfulDemosEndOffGoal) {
  const auto& ds = small_dataset();
  for (const auto& d : ds.demonstrations) {
    ASSERT_TRUE(d.has_states());
    EXPECT_EQ(goal_reached(d.task_name, d.states.back()), d.success) << d.demo_id;
  }
}

TEST(Synthetic, DeterministicInSeed) {
  const auto g = small_generator({"stack", "color_stack"}, 3);
  const auto a = generate_synthetic_dataset(g, 11);
  const auto b = generate_synthetic_dataset(g, 11);
  const auto c = generate_synthetic_dataset(g, 12);
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int v = 0; v < 2; ++v) {
      EXPECT_EQ(a.demonstrations[i].views[v], b.demonstrations[i].views[v]);
      differs |= a.demonstrations[i].views[v] != c.demonstrations[i].views[v];
    }
  }
  EXPECT_TRUE(differs);
}

TEST(Synthetic, TaskSetAndUnknownTask) {
  const auto ds = generate_synthetic_dataset(small_generator({"stack", "color_push"}, 10), 1);
  EXPECT_EQ(ds.tasks.size(), 2u);
  EXPECT_EQ(ds.size(), 20u);
  EXPECT_THROW(generate_synthetic_dataset(small_generator({"juggle"}, 1), 1), ConfigError);
}

TEST(Synthetic, AllKnownTasksGenerateBothOutcomes) {
  Rng rng = make_rng(5);
  for (const auto& task : known_tasks()) {
    for (bool success : {true, false}) {
      const auto d = generate_demonstration(task, success, 30, 32, rng);
      EXPECT_EQ(d.length(), 30);
      EXPECT_EQ(d.views[1].size(), d.views[0].size());
      EXPECT_EQ(goal_reached(task, d.states.back()), success) << task;
    }
  }
}

TEST(Synthetic, SplitsAreDisjointAndTestUsesHeldOutTasks) {
  DataConfig cfg;
  cfg.generator = small_generator({"stack", "color_push"}, 2);
  cfg.validation_demos_per_task = 1;
  cfg.test_demos_per_task = 2;
  std::set<std::string> ids;
  std::size_t total = 0;
  for (auto split : {Split::train, Split::validation, Split::test}) {
    const auto ds = generate_split(cfg, 4, split);
    total += ds.size();
    for (const auto& d : ds.demonstrations) ids.insert(d.demo_id);
    if (split == Split::test) {
      EXPECT_EQ(ds.tasks, std::set<std::string>{"color_stack"});
    }
  }
  EXPECT_EQ(ids.size(), total);
}

TEST(Dataset, SaveLoadRoundTrip) {
  TempDir dir("asn_test_roundtrip");
  const auto& ds = small_dataset();
  save_dataset(ds, dir.path);
  const auto report = load_dataset(dir.path, Split::train);
  EXPECT_TRUE(report.rejected.empty());
  ASSERT_EQ(report.dataset.size(), 8u);
  EXPECT_EQ(report.dataset.tasks, ds.tasks);
  std::map<std::string, const Demonstration*> by_id;
  for (const auto& d : ds.demonstrations) by_id[d.demo_id] = &d;
  for (const auto& d : report.dataset.demonstrations) {
    const auto* orig = by_id.at(d.demo_id);
    EXPECT_EQ(d.success, orig->success);
    EXPECT_EQ(d.task_name, orig->task_name);
    EXPECT_EQ(d.views[0], orig->views[0]);
    EXPECT_EQ(d.views[1], orig->views[1]);
    EXPECT_EQ(d.states, orig->states);
  }
}

TEST(Dataset, LengthMismatchRejectsOnlyThatDemo) {
  TempDir dir("asn_test_mismatch");
  const auto& ds = small_dataset();
  save_dataset(ds, dir.path);
  const auto& victim = ds.demonstrations[1];
  const auto demo_dir = dir.path / "train" / victim.task_name / victim.demo_id;
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%06d.png", victim.length() - 1);
  fs::remove(demo_dir / "view1" / name);
  const auto report = load_dataset(dir.path, Split::train);
  EXPECT_EQ(report.dataset.size(), ds.size() - 1);
  ASSERT_EQ(report.rejected.size(), 1u);
  EXPECT_EQ(report.rejected[0].demo_id, victim.demo_id);
}

TEST(Dataset, MissingSplitIsFatalEmptySplitWarns) {
  TempDir dir("asn_test_empty");
  EXPECT_THROW(load_dataset(dir.path, Split::train), LoadError);
  fs::create_directories(dir.path / "validation");
  const auto report = load_dataset(dir.path, Split::validation);
  EXPECT_TRUE(report.dataset.empty());
  EXPECT_EQ(report.warnings.size(), 1u);
}

TEST(Augment, IdentityConfig) {
  AugmentConfig cfg;
  cfg.brightness_min = cfg.brightness_max = 1.0;
  cfg.contrast_min = cfg.contrast_max = 1.0;
  cfg.saturation_min = cfg.saturation_max = 1.0;
  cfg.mirror_prob = 0.0;
  Rng rng = make_rng(1);
  const Frame f{gradient_image(16), 3, 1};
  for (int i = 0; i < 5; ++i) EXPECT_EQ(augment(f, rng, cfg), f);
}

TEST(Augment, MirrorReflectsColumns) {
  AugmentConfig cfg;
  cfg.brightness_min = cfg.brightness_max = 1.0;
  cfg.contrast_min = cfg.contrast_max = 1.0;
  cfg.saturation_min = cfg.saturation_max = 1.0;
  cfg.mirror_prob = 1.0;
  Rng rng = make_rng(2);
  const Frame f{gradient_image(9), 0, 0};
  const Frame out = augment(f, rng, cfg);
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c)
      for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(out.pixels.at(r, c, ch), f.pixels.at(r, 8 - c, ch));
}

TEST(Augment, BrightnessClipsAgainstDirectArithmetic) {
  Image img(4);
  for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<std::uint8_t>(200 + (i * 13) % 51);
  img.rgb[5] = 250;
  const Image out = adjust_brightness(img, 1.2);
  for (std::size_t i = 0; i < img.rgb.size(); ++i) {
    const double expected = std::min(255.0, std::round(img.rgb[i] * 1.2));
    EXPECT_EQ(out.rgb[i], expected);
  }
  EXPECT_EQ(out.rgb[5], 255);
}

TEST(Augment, NeverChangesSizeAndCropResizesBack) {
  AugmentConfig cfg;
  cfg.crop = true;
  Rng rng = make_rng(3);
  const Frame f{gradient_image(24), 0, 0};
  for (int i = 0; i < 20; ++i) EXPECT_EQ(augment(f, rng, cfg).pixels.size, 24);
  const Image full = crop_and_resize(f.pixels, 1.0, 0.3, 0.7);
  EXPECT_EQ(full, f.pixels);
}

TEST(Tensor, ImageNetNormalization) {
  Image img(2);
  img.rgb = {0, 128, 255, 10, 20, 30, 40, 50, 60, 70, 80, 90};
  const auto t = to_tensor(img);
  ASSERT_EQ(t.sizes(), (std::vector<std::int64_t>{1, 3, 2, 2}));
  for (int ch = 0; ch < 3; ++ch) {
    const double expected = (img.at(0, 0, ch) / 255.0 - kImageNetMean[ch]) / kImageNetStd[ch];
    EXPECT_NEAR(t[0][ch][0][0].item<double>(), expected, 1e-6);
  }
}

TEST(Sampling, DefaultBatchStructure) {
  Rng rng = make_rng(4);
  const BatchSpec spec;
  const auto batch = sample_metric_batch(small_dataset(), spec, rng, AugmentConfig{});
  ASSERT_EQ(batch.frames.size(), 32u);
  EXPECT_EQ(batch.images.size(0), 32);
  std::map<int, std::vector<int>> members;
  for (int i = 0; i < 32; ++i) members[batch.anchor_labels[i]].push_back(i);
  EXPECT_EQ(members.size(), 16u);
  std::set<int> demos;
  for (const auto& [label, idx] : members) {
    ASSERT_EQ(idx.size(), 2u);
    const auto& a = batch.frames[idx[0]];
    const auto& b = batch.frames[idx[1]];
    EXPECT_NE(a.view_id, b.view_id);
    EXPECT_EQ(a.time_index, b.time_index);
    EXPECT_EQ(batch.demo_indices[idx[0]], batch.demo_indices[idx[1]]);
    demos.insert(batch.demo_indices[idx[0]]);
  }
  EXPECT_EQ(demos.size(), 4u);
}

TEST(Sampling, SinglePairBatch) {
  Rng rng = make_rng(5);
  BatchSpec spec;
  spec.view_pairs = 1;
  spec.frames = 8;
  const auto batch = sample_metric_batch(small_dataset(), spec, rng, AugmentConfig{});
  EXPECT_EQ(batch.frames.size(), 8u);
  EXPECT_EQ(std::set<int>(batch.anchor_labels.begin(), batch.anchor_labels.end()).size(), 4u);
  EXPECT_EQ(std::set<int>(batch.demo_indices.begin(), batch.demo_indices.end()).size(), 1u);
}

TEST(Sampling, TooSmallDatasetIsSamplingError) {
  Rng rng = make_rng(6);
  MultiTaskDataset tiny;
  tiny.demonstrations.push_back(small_dataset().demonstrations[0]);
  EXPECT_THROW(sample_metric_batch(tiny, BatchSpec{}, rng, AugmentConfig{}), SamplingError);
}

TEST(Sampling, DeterministicAndLabelFree) {
  MultiTaskDataset stripped = small_dataset();
  for (auto& d : stripped.demonstrations) d.task_name.clear();
  stripped.tasks.clear();
  Rng a = make_rng(8), b = make_rng(8);
  const auto x = sample_metric_batch(small_dataset(), BatchSpec{}, a, AugmentConfig{});
  const auto y = sample_metric_batch(stripped, BatchSpec{}, b, AugmentConfig{});
  EXPECT_EQ(x.frames, y.frames);
  EXPECT_EQ(x.anchor_labels, y.anchor_labels);
  const auto sx = sample_skill_pairs(small_dataset(), SkillFrameSpec{2, 5}, 6, true, a);
  const auto sy = sample_skill_pairs(stripped, SkillFrameSpec{2, 5}, 6, true, b);
  for (std::size_t i = 0; i < sx.size(); ++i) EXPECT_EQ(sx[i].frames, sy[i].frames);
}

TEST(Sampling, SkillStartRange) {
  EXPECT_EQ(max_skill_start(SkillFrameSpec{2, 15}, 40), 24);
  MultiTaskDataset ds;
  Rng gen = make_rng(9);
  ds.demonstrations.push_back(generate_demonstration("stack", true, 40, 16, gen));
  Rng rng = make_rng(10);
  std::set<int> starts;
  for (const auto& t : sample_skill_pairs(ds, SkillFrameSpec{2, 15}, 2000, true, rng)) {
    ASSERT_EQ(t.frames.size(), 2u);
    EXPECT_EQ(t.frames[1].time_index - t.frames[0].time_index, 15);
    EXPECT_EQ(t.frames[0].view_id, t.frames[1].view_id);
    starts.insert(t.start);
  }
  EXPECT_EQ(*starts.begin(), 0);
  EXPECT_EQ(*starts.rbegin(), 24);
  EXPECT_EQ(starts.size(), 25u);
}

TEST(Sampling, SingleFrameSkills) {
  Rng rng = make_rng(11);
  for (const auto& t : sample_skill_pairs(small_dataset(), SkillFrameSpec{1, 99}, 10, false, rng)) {
    EXPECT_EQ(t.frames.size(), 1u);
  }
}

TEST(Sampling, SuccessOnlyFiltering) {
  Rng rng = make_rng(12);
  for (const auto& t : sample_skill_pairs(small_dataset(), SkillFrameSpec{2, 5}, 50, true, rng)) {
    EXPECT_TRUE(small_dataset().demonstrations[t.demo_index].success);
  }
  MultiTaskDataset failures;
  for (const auto& d : small_dataset().demonstrations)
    if (!d.success) failures.demonstrations.push_back(d);
  ASSERT_FALSE(failures.empty());
  EXPECT_THROW(sample_skill_pairs(failures, SkillFrameSpec{2, 5}, 4, true, rng), SamplingError);
  EXPECT_NO_THROW(sample_skill_pairs(failures, SkillFrameSpec{2, 5}, 4, false, rng));
}

TEST(Sampling, SkillTensorShape) {
  Rng rng = make_rng(13);
  const auto tuples = sample_skill_pairs(small_dataset(), SkillFrameSpec{2, 5}, 3, true, rng);
  const auto t = skill_tensor(tuples, rng, AugmentConfig{});
  EXPECT_EQ(t.sizes(), (std::vector<std::int64_t>{6, 3, 32, 32}));
}
