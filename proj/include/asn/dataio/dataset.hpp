// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "asn/dataio/image.hpp"
#include "asn/dataio/world.hpp"

namespace asn::dataio {

struct Frame {
  Image pixels;  // raw, values in [0, 255]
  int time_index = 0;
  int view_id = 0;

  bool operator==(const Frame&) const = default;
};

// Two synchronized views of one task execution. `task_name` is metadata for
// grouping and generation only; nothing on the training path reads it.
struct Demonstration {
  std::array<std::vector<Frame>, 2> views;
  std::string task_name;
  bool success = true;
  std::string demo_id;
  int fps = 10;
  // Ground-truth world state per frame; present for synthetic demonstrations.
  std::vector<WorldState> states;
  Appearance appearance;

  int length() const { return static_cast<int>(views[0].size()); }
  bool has_states() const { return !states.empty() && static_cast<int>(states.size()) == length(); }
};

enum class Split { train, validation, test };

std::string to_string(Split split);
Split parse_split(const std::string& text);

struct MultiTaskDataset {
  std::vector<Demonstration> demonstrations;
  std::set<std::string> tasks;
  Split split = Split::train;

  std::size_t size() const { return demonstrations.size(); }
  bool empty() const { return demonstrations.empty(); }
  // Demonstrations whose task is in `tasks` (used only to select evaluation splits).
  MultiTaskDataset select_tasks(const std::vector<std::string>& tasks) const;
};

struct RejectedDemo {
  std::string demo_id;
  std::string reason;
};

struct LoadReport {
  MultiTaskDataset dataset;
  std::vector<RejectedDemo> rejected;
  std::vector<std::string> warnings;
};

// Reads <root>/<split>/<task>/<demo_id>/{view0,view1}/frame_%06d.png plus
// meta.json. A missing split directory is fatal; malformed demonstrations are
// rejected individually and listed in the report.
LoadReport load_dataset(const std::filesystem::path& root, Split split);

// Loads one demonstration directory (`<...>/<demo_id>`).
Demonstration load_demonstration(const std::filesystem::path& demo_dir, const std::string& task_name);

void save_dataset(const MultiTaskDataset& dataset, const std::filesystem::path& root);
void save_demonstration(const Demonstration& demo, const std::filesystem::path& demo_dir);

}  // namespace asn::dataio
