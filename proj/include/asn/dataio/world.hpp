// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "asn/dataio/image.hpp"

namespace asn::dataio {

// Side-view block world on the unit square; y points up, the ground is a
// horizontal strip at the bottom. Units are "env units" (nominal meters).
namespace world {
inline constexpr double kGroundY = 0.1;
inline constexpr double kRestY = 0.75;            // travel height of the effector
inline constexpr double kGripperHalfHeight = 0.015;
inline constexpr double kGripperHalfWidth = 0.07;
inline constexpr double kDefaultHalfSize = 0.06;  // block half edge
inline constexpr int kNumColors = 4;              // red, green, blue, yellow
}  // namespace world

struct Block {
  double x = 0.0;  // center
  double y = 0.0;
  int color = 0;
  double half = world::kDefaultHalfSize;

  bool operator==(const Block&) const = default;
};

enum class Attachment { none, grasp, push };

struct WorldState {
  double effector_x = 0.5;
  double effector_y = world::kRestY;
  Attachment attachment = Attachment::none;
  int attached = -1;  // block index when attachment != none
  double offset_x = 0.0;
  double offset_y = 0.0;
  std::vector<Block> blocks;

  bool operator==(const WorldState&) const = default;
};

// Per-demonstration appearance parameters; the cameras themselves are fixed.
struct Appearance {
  std::array<double, 3> background{0.86, 0.88, 0.90};
  double light = 1.0;
};

// Effector-centered points used by the scripts and the toy environment.
double grasp_height(const Block& b);  // effector y when holding `b` by its top
double push_offset(const Block& b);   // horizontal effector offset when pushing `b`

// Height at which `b` comes to rest if released at its current x.
double support_center_y(const WorldState& state, int index);
void drop(WorldState& state, int index);

// Moves any attached block along with the effector.
void follow_effector(WorldState& state);
void attach(WorldState& state, int index, Attachment mode);
void release(WorldState& state);

// Renders view 0 or 1 of the scene. Pure function of its inputs.
Image render(const WorldState& state, int view, int size, const Appearance& appearance = {});

}  // namespace asn::dataio
