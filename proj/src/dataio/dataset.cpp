// SPDX-License-Identifier: Apache-2.0
#include "asn/dataio/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "asn/errors.hpp"

namespace asn::dataio {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.png", index);
  return buf;
}

std::vector<fs::path> sorted_frames(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("frame_") && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

json state_to_json(const WorldState& s) {
  json blocks = json::array();
  for (const auto& b : s.blocks) blocks.push_back({{"x", b.x}, {"y", b.y}, {"color", b.color}, {"half", b.half}});
  return {{"effector", {s.effector_x, s.effector_y}},
          {"attachment", static_cast<int>(s.attachment)},
          {"attached", s.attached},
          {"offset", {s.offset_x, s.offset_y}},
          {"blocks", blocks}};
}

WorldState state_from_json(const json& j) {
  WorldState s;
  s.effector_x = j.at("effector").at(0).get<double>();
  s.effector_y = j.at("effector").at(1).get<double>();
  s.attachment = static_cast<Attachment>(j.at("attachment").get<int>());
  s.attached = j.at("attached").get<int>();
  s.offset_x = j.at("offset").at(0).get<double>();
  s.offset_y = j.at("offset").at(1).get<double>();
  for (const auto& b : j.at("blocks")) {
    s.blocks.push_back({b.at("x").get<double>(), b.at("y").get<double>(), b.at("color").get<int>(),
                        b.at("half").get<double>()});
  }
  return s;
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "validation" || text == "val") return Split::validation;
  if (text == "test") return Split::test;
  throw ConfigError("split", "unknown split '" + text + "'");
}

MultiTaskDataset MultiTaskDataset::select_tasks(const std::vector<std::string>& wanted) const {
  MultiTaskDataset out;
  out.split = split;
  for (const auto& demo : demonstrations) {
    if (std::find(wanted.begin(), wanted.end(), demo.task_name) != wanted.end()) {
      out.demonstrations.push_back(demo);
      out.tasks.insert(demo.task_name);
    }
  }
  return out;
}

Demonstration load_demonstration(const fs::path& demo_dir, const std::string& task_name) {
  Demonstration demo;
  demo.task_name = task_name;
  demo.demo_id = demo_dir.filename().string();
  const fs::path meta_path = demo_dir / "meta.json";
  if (!fs::exists(meta_path)) throw LoadError(demo.demo_id + ": missing meta.json");
  json meta;
  try {
    std::ifstream in(meta_path);
    in >> meta;
    demo.success = meta.at("success").get<bool>();
    demo.fps = meta.value("fps", 10);
  } catch (const json::exception& e) {
    throw LoadError(demo.demo_id + ": malformed meta.json (" + e.what() + ")");
  }
  if (meta.contains("appearance")) {
    const auto& a = meta["appearance"];
    demo.appearance.background = a.at("background").get<std::array<double, 3>>();
    demo.appearance.light = a.at("light").get<double>();
  }
  for (int v = 0; v < 2; ++v) {
    const fs::path view_dir = demo_dir / ("view" + std::to_string(v));
    if (!fs::is_directory(view_dir)) throw LoadError(demo.demo_id + ": missing view" + std::to_string(v));
    const auto files = sorted_frames(view_dir);
    for (int t = 0; t < static_cast<int>(files.size()); ++t) {
      demo.views[v].push_back(Frame{read_png(files[t]), t, v});
    }
  }
  if (demo.views[0].size() != demo.views[1].size()) {
    throw LoadError(demo.demo_id + ": view length mismatch (" + std::to_string(demo.views[0].size()) + " vs " +
                    std::to_string(demo.views[1].size()) + ")");
  }
  if (demo.length() < 2) throw LoadError(demo.demo_id + ": fewer than 2 frames");
  const int edge = demo.views[0][0].pixels.size;
  for (const auto& view : demo.views) {
    for (const auto& f : view) {
      if (f.pixels.size != edge) throw LoadError(demo.demo_id + ": inconsistent frame sizes");
    }
  }
  const fs::path states_path = demo_dir / "states.json";
  if (fs::exists(states_path)) {
    std::ifstream in(states_path);
    json states;
    in >> states;
    for (const auto& s : states) demo.states.push_back(state_from_json(s));
    if (!demo.has_states()) throw LoadError(demo.demo_id + ": states.json length does not match frames");
  }
  return demo;
}

LoadReport load_dataset(const fs::path& root, Split split) {
  const fs::path split_dir = root / to_string(split);
  if (!fs::is_directory(split_dir)) {
    throw LoadError("dataset split directory not found: " + split_dir.string());
  }
  LoadReport report;
  report.dataset.split = split;
  std::vector<fs::path> task_dirs;
  for (const auto& e : fs::directory_iterator(split_dir)) {
    if (e.is_directory()) task_dirs.push_back(e.path());
  }
  std::sort(task_dirs.begin(), task_dirs.end());
  for (const auto& task_dir : task_dirs) {
    std::vector<fs::path> demo_dirs;
    for (const auto& e : fs::directory_iterator(task_dir)) {
      if (e.is_directory()) demo_dirs.push_back(e.path());
    }
    std::sort(demo_dirs.begin(), demo_dirs.end());
    const std::string task = task_dir.filename().string();
    for (const auto& demo_dir : demo_dirs) {
      try {
        report.dataset.demonstrations.push_back(load_demonstration(demo_dir, task));
        report.dataset.tasks.insert(task);
      } catch (const LoadError& e) {
        report.rejected.push_back({demo_dir.filename().string(), e.what()});
      }
    }
  }
  if (report.dataset.empty()) {
    report.warnings.push_back("split '" + to_string(split) + "' under " + root.string() + " is empty");
  }
  return report;
}

void save_demonstration(const Demonstration& demo, const fs::path& demo_dir) {
  for (int v = 0; v < 2; ++v) {
    const fs::path view_dir = demo_dir / ("view" + std::to_string(v));
    fs::create_directories(view_dir);
    for (const auto& f : demo.views[v]) write_png(f.pixels, view_dir / frame_name(f.time_index));
  }
  json meta = {{"success", demo.success},
               {"fps", demo.fps},
               {"task", demo.task_name},
               {"frames", demo.length()},
               {"appearance", {{"background", demo.appearance.background}, {"light", demo.appearance.light}}}};
  std::ofstream(demo_dir / "meta.json") << meta.dump(2) << '\n';
  if (demo.has_states()) {
    json states = json::array();
    for (const auto& s : demo.states) states.push_back(state_to_json(s));
    std::ofstream(demo_dir / "states.json") << states.dump() << '\n';
  }
}

void save_dataset(const MultiTaskDataset& dataset, const fs::path& root) {
  const fs::path split_dir = root / to_string(dataset.split);
  fs::create_directories(split_dir);
  for (const auto& demo : dataset.demonstrations) {
    save_demonstration(demo, split_dir / demo.task_name / demo.demo_id);
  }
}

}  // namespace asn::dataio
