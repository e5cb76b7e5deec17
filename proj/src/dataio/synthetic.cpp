// SPDX-License-Identifier: Apache-2.0
#include "asn/dataio/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "asn/errors.hpp"

namespace asn::dataio {
namespace {

constexpr int kRed = 0, kGreen = 1, kBlue = 2;

enum class Event { none, grasp, push, release };

struct Waypoint {
  double x, y;
  Event event = Event::none;
  int block = -1;
};

struct Script {
  WorldState initial;
  std::vector<Waypoint> waypoints;
  bool grasp_fails = false;  // grasp events leave the block behind
};

double clamp_x(double x) { return std::clamp(x, 0.12, 0.88); }

// Non-overlapping ground positions, at least `gap` apart.
std::vector<double> ground_positions(Rng& rng, int count, double gap) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<double> xs;
    for (int i = 0; i < count; ++i) xs.push_back(uniform(rng, 0.14, 0.86));
    bool ok = true;
    for (int i = 0; i < count && ok; ++i) {
      for (int j = i + 1; j < count && ok; ++j) ok = std::abs(xs[i] - xs[j]) >= gap;
    }
    if (ok) return xs;
  }
  std::vector<double> xs;
  for (int i = 0; i < count; ++i) xs.push_back(0.15 + 0.7 * i / std::max(1, count - 1));
  return xs;
}

Block ground_block(double x, int color, double half) {
  return Block{x, world::kGroundY + half, color, half};
}

// A free ground x at least `gap` from every block in `state` (ignoring `skip`).
double free_ground_x(Rng& rng, const WorldState& state, int skip, double gap) {
  double best_x = 0.5, best_gap = -1.0;
  for (int attempt = 0; attempt < 200; ++attempt) {
    const double x = uniform(rng, 0.14, 0.86);
    double nearest = 1e9;
    for (int i = 0; i < static_cast<int>(state.blocks.size()); ++i) {
      if (i != skip) nearest = std::min(nearest, std::abs(state.blocks[i].x - x));
    }
    if (nearest >= gap) return x;
    if (nearest > best_gap) {
      best_gap = nearest;
      best_x = x;
    }
  }
  return best_x;
}

void add_pick(std::vector<Waypoint>& w, const Block& b) {
  w.push_back({b.x, world::kRestY});
  w.push_back({b.x, grasp_height(b), Event::grasp, -1});
  w.push_back({b.x, world::kRestY});
}

// Place the held block so its center lands at (x, center_y).
void add_place(std::vector<Waypoint>& w, const Block& held, double x, double center_y) {
  w.push_back({x, world::kRestY});
  w.push_back({x, center_y + held.half + world::kGripperHalfHeight, Event::release, -1});
  w.push_back({x, world::kRestY});
}

void add_push(std::vector<Waypoint>& w, const Block& b, double to_x) {
  const double dir = to_x >= b.x ? 1.0 : -1.0;
  const double off = push_offset(b);
  w.push_back({b.x - dir * off, world::kRestY});
  w.push_back({b.x - dir * off, b.y, Event::push, -1});
  w.push_back({to_x - dir * off, b.y, Event::release, -1});
  w.push_back({to_x - dir * off, world::kRestY});
}

void tag(std::vector<Waypoint>& w, std::size_t from, int block) {
  for (std::size_t i = from; i < w.size(); ++i) {
    if (w[i].event == Event::grasp || w[i].event == Event::push) w[i].block = block;
  }
}

Script script_stack(bool success, double half, Rng& rng) {
  Script s;
  auto xs = ground_positions(rng, 2, 0.3);
  const int c0 = uniform_int(rng, 0, world::kNumColors - 1);
  const int c1 = (c0 + uniform_int(rng, 1, world::kNumColors - 1)) % world::kNumColors;
  s.initial.blocks = {ground_block(xs[0], c0, half), ground_block(xs[1], c1, half)};
  const Block& src = s.initial.blocks[0];
  const Block& dst = s.initial.blocks[1];
  add_pick(s.waypoints, src);
  tag(s.waypoints, 0, 0);
  double target_x = dst.x;
  double target_y = dst.y + 2 * half;
  if (!success) {
    const int mode = uniform_int(rng, 0, 1);
    if (mode == 0) {
      s.grasp_fails = true;
    } else {
      target_x = free_ground_x(rng, s.initial, 0, 0.3);
      target_y = world::kGroundY + half;
    }
  }
  add_place(s.waypoints, src, target_x, target_y);
  return s;
}

Script script_color_push(bool success, double half, Rng& rng) {
  Script s;
  // Red and blue with green off to one side, never between them.
  auto xs = ground_positions(rng, 3, 0.2);
  std::sort(xs.begin(), xs.end());
  const bool green_left = bernoulli(rng, 0.5);
  const bool red_first = bernoulli(rng, 0.5);
  double green_x = green_left ? xs[0] : xs[2];
  double a = green_left ? xs[1] : xs[0];
  double b = green_left ? xs[2] : xs[1];
  const double red_x = red_first ? a : b;
  const double blue_x = red_first ? b : a;
  s.initial.blocks = {ground_block(red_x, kRed, half), ground_block(green_x, kGreen, half),
                      ground_block(blue_x, kBlue, half)};
  const double dir = blue_x > red_x ? 1.0 : -1.0;
  double goal_x = blue_x - dir * (2 * half + 0.004);
  if (!success) {
    // Stop well short of the blue block.
    goal_x = red_x + (goal_x - red_x) * uniform(rng, 0.15, 0.5);
  }
  add_push(s.waypoints, s.initial.blocks[0], goal_x);
  tag(s.waypoints, 0, 0);
  return s;
}

Script script_color_stack(bool success, double half, Rng& rng) {
  Script s;
  auto xs = ground_positions(rng, 3, 0.24);
  std::shuffle(xs.begin(), xs.end(), rng);
  s.initial.blocks = {ground_block(xs[0], kRed, half), ground_block(xs[1], kGreen, half),
                      ground_block(xs[2], kBlue, half)};
  const Block& red = s.initial.blocks[0];
  add_pick(s.waypoints, red);
  tag(s.waypoints, 0, 0);
  int target = 2;
  if (!success) {
    const int mode = uniform_int(rng, 0, 1);
    if (mode == 0) target = 1;  // wrong color
    else s.grasp_fails = true;
  }
  const Block& dst = s.initial.blocks[target];
  add_place(s.waypoints, red, dst.x, dst.y + 2 * half);
  return s;
}

Script script_separate_stack(bool success, double half, Rng& rng) {
  Script s;
  auto xs = ground_positions(rng, 2, 0.45);
  std::array<int, world::kNumColors> colors{0, 1, 2, 3};
  std::shuffle(colors.begin(), colors.end(), rng);
  Block bottom = ground_block(xs[0], colors[1], half);
  Block top{xs[0], bottom.y + 2 * half, colors[0], half};
  Block other = ground_block(xs[1], colors[2], half);
  s.initial.blocks = {top, bottom, other};
  // Unstack the top block to a free spot.
  add_pick(s.waypoints, top);
  tag(s.waypoints, 0, 0);
  const double free_x = free_ground_x(rng, s.initial, 0, 0.2);
  add_place(s.waypoints, top, free_x, world::kGroundY + half);
  // Then put the former bottom block on it.
  const std::size_t second = s.waypoints.size();
  add_pick(s.waypoints, bottom);
  tag(s.waypoints, second, 1);
  double target_x = free_x;
  if (!success) target_x = other.x;  // stacked on the wrong block
  add_place(s.waypoints, bottom, target_x, world::kGroundY + 3 * half);
  return s;
}

Script make_script(const std::string& task, bool success, double half, Rng& rng) {
  if (task == "stack") return script_stack(success, half, rng);
  if (task == "color_push") return script_color_push(success, half, rng);
  if (task == "color_stack") return script_color_stack(success, half, rng);
  if (task == "separate_stack") return script_separate_stack(success, half, rng);
  throw ConfigError("dataio.tasks", "unknown task '" + task + "'");
}

// Plays the script back at `frames` evenly spaced times along the effector
// path. Segment speeds are jittered per demonstration.
std::vector<WorldState> play(const Script& script, int frames, Rng& rng) {
  WorldState state = script.initial;
  state.effector_x = clamp_x(uniform(rng, 0.3, 0.7));
  state.effector_y = world::kRestY + uniform(rng, -0.03, 0.05);

  std::vector<double> seg_time;
  double px = state.effector_x, py = state.effector_y;
  for (const auto& w : script.waypoints) {
    const double len = std::hypot(w.x - px, w.y - py);
    seg_time.push_back(len / uniform(rng, 0.8, 1.25));
    px = w.x;
    py = w.y;
  }
  // Short pause at the end so the goal configuration is visible.
  const double path_time = std::accumulate(seg_time.begin(), seg_time.end(), 0.0);
  const double total = path_time * 1.08;

  std::vector<WorldState> states;
  states.reserve(frames);
  std::size_t next = 0;
  double seg_start = 0.0;
  double sx = state.effector_x, sy = state.effector_y;
  for (int f = 0; f < frames; ++f) {
    const double t = total * f / (frames - 1);
    // Consume every waypoint reached by time t, firing its event.
    while (next < script.waypoints.size() && seg_start + seg_time[next] <= t + 1e-12) {
      const Waypoint& w = script.waypoints[next];
      state.effector_x = w.x;
      state.effector_y = w.y;
      follow_effector(state);
      switch (w.event) {
        case Event::grasp:
          if (!script.grasp_fails) attach(state, w.block, Attachment::grasp);
          break;
        case Event::push: attach(state, w.block, Attachment::push); break;
        case Event::release: release(state); break;
        case Event::none: break;
      }
      seg_start += seg_time[next];
      sx = w.x;
      sy = w.y;
      ++next;
    }
    if (next < script.waypoints.size()) {
      const Waypoint& w = script.waypoints[next];
      const double frac = seg_time[next] > 0 ? (t - seg_start) / seg_time[next] : 1.0;
      state.effector_x = sx + (w.x - sx) * frac;
      state.effector_y = sy + (w.y - sy) * frac;
      follow_effector(state);
    }
    states.push_back(state);
  }
  return states;
}

}  // namespace

const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> tasks{"stack", "color_push", "color_stack", "separate_stack"};
  return tasks;
}

Demonstration generate_demonstration(const std::string& task, bool success, int frames, int image_size,
                                     Rng& rng) {
  if (frames < 2) throw ConfigError("dataio.frames_per_demo", "demonstrations need at least 2 frames");
  const double half = world::kDefaultHalfSize * uniform(rng, 0.9, 1.1);
  Script script = make_script(task, success, half, rng);
  Demonstration demo;
  demo.task_name = task;
  demo.success = success;
  demo.appearance.background = {uniform(rng, 0.78, 0.92), uniform(rng, 0.80, 0.92), uniform(rng, 0.82, 0.94)};
  demo.appearance.light = uniform(rng, 0.92, 1.05);
  demo.states = play(script, frames, rng);
  for (int v = 0; v < 2; ++v) {
    for (int t = 0; t < frames; ++t) {
      demo.views[v].push_back(Frame{render(demo.states[t], v, image_size, demo.appearance), t, v});
    }
  }
  return demo;
}

MultiTaskDataset generate_synthetic_dataset(const GeneratorConfig& config, std::uint64_t seed, Split split) {
  if (config.tasks.empty()) throw ConfigError("dataio.tasks", "at least one task is required");
  for (const auto& task : config.tasks) {
    if (std::find(known_tasks().begin(), known_tasks().end(), task) == known_tasks().end()) {
      throw ConfigError("dataio.tasks", "unknown task '" + task + "'");
    }
  }
  if (config.fraction_unsuccessful < 0.0 || config.fraction_unsuccessful >= 1.0) {
    throw ConfigError("dataio.fraction_unsuccessful", "must lie in [0, 1)");
  }
  MultiTaskDataset dataset;
  dataset.split = split;
  for (std::size_t ti = 0; ti < config.tasks.size(); ++ti) {
    const auto& task = config.tasks[ti];
    dataset.tasks.insert(task);
    Rng rng = make_rng(seed, 1000 * (static_cast<std::uint64_t>(split) + 1) + ti);
    const int failures = static_cast<int>(std::lround(config.fraction_unsuccessful * config.demos_per_task));
    std::vector<bool> success(config.demos_per_task, true);
    std::fill(success.begin(), success.begin() + std::min(failures, config.demos_per_task), false);
    std::shuffle(success.begin(), success.end(), rng);
    for (int d = 0; d < config.demos_per_task; ++d) {
      Demonstration demo = generate_demonstration(task, success[d], config.frames_per_demo, config.image_size, rng);
      char id[64];
      std::snprintf(id, sizeof(id), "%s_%s_%04d", task.c_str(), to_string(split).c_str(), d);
      demo.demo_id = id;
      demo.fps = config.fps;
      dataset.demonstrations.push_back(std::move(demo));
    }
  }
  return dataset;
}

MultiTaskDataset generate_split(const DataConfig& config, std::uint64_t seed, Split split) {
  GeneratorConfig g = config.generator;
  switch (split) {
    case Split::train:
      break;
    case Split::validation:
      g.demos_per_task = config.validation_demos_per_task;
      break;
    case Split::test:
      g.tasks = config.test_tasks;
      g.demos_per_task = config.test_demos_per_task;
      break;
  }
  return generate_synthetic_dataset(g, seed, split);
}

bool goal_reached(const std::string& task, const WorldState& s) {
  auto on_top = [&](int upper, int lower) {
    const Block& u = s.blocks[upper];
    const Block& l = s.blocks[lower];
    return std::abs(u.x - l.x) < 0.5 * l.half && std::abs(u.y - (l.y + l.half + u.half)) < 0.02;
  };
  if (task == "stack") return on_top(0, 1);
  if (task == "color_stack") return on_top(0, 2);
  if (task == "separate_stack") return on_top(1, 0);
  if (task == "color_push") {
    const Block& r = s.blocks[0];
    const Block& b = s.blocks[2];
    return std::abs(std::abs(r.x - b.x) - (r.half + b.half)) < 0.02;
  }
  throw ConfigError("dataio.tasks", "unknown task '" + task + "'");
}

}  // namespace asn::dataio
