// SPDX-License-Identifier: Apache-2.0
#include "asn/dataio/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace asn::dataio {
namespace {

constexpr std::array<std::array<double, 3>, world::kNumColors> kPalette{{
    {0.86, 0.16, 0.16},
    {0.16, 0.70, 0.24},
    {0.16, 0.27, 0.86},
    {0.90, 0.78, 0.16},
}};
constexpr std::array<double, 3> kGround{0.45, 0.33, 0.22};
constexpr std::array<double, 3> kGripper{0.20, 0.20, 0.22};
constexpr std::array<double, 3> kBorder{0.10, 0.10, 0.12};

// World -> normalized image coordinates (u right, v down, both in [0, 1]).
struct Camera {
  double a, b, c, d, tx, ty;  // [u v] = [a b; c d] [x y] + [tx ty]
  double ia, ib, ic, id;      // inverse linear part
};

Camera make_camera(double angle_deg, double scale, double tx, double ty) {
  // Rotate and scale about the scene center, flip y so v points down, then shift.
  const double th = angle_deg * std::numbers::pi / 180.0;
  Camera cam{};
  cam.a = scale * std::cos(th);
  cam.b = -scale * std::sin(th);
  cam.c = -scale * std::sin(th);
  cam.d = -scale * std::cos(th);
  cam.tx = 0.5 + tx - 0.5 * (cam.a + cam.b);
  cam.ty = 0.5 + ty - 0.5 * (cam.c + cam.d);
  const double det = cam.a * cam.d - cam.b * cam.c;
  cam.ia = cam.d / det;
  cam.ib = -cam.b / det;
  cam.ic = -cam.c / det;
  cam.id = cam.a / det;
  return cam;
}

const Camera& camera(int view) {
  static const std::array<Camera, 2> cams{make_camera(0.0, 1.0, 0.0, 0.0),
                                          make_camera(-14.0, 0.86, 0.03, 0.02)};
  return cams[view == 0 ? 0 : 1];
}

struct Rect {
  double x0, y0, x1, y1;
  std::array<double, 3> color;
};

}  // namespace

double grasp_height(const Block& b) { return b.y + b.half + world::kGripperHalfHeight; }

double push_offset(const Block& b) { return b.half + world::kGripperHalfWidth + 0.005; }

double support_center_y(const WorldState& state, int index) {
  const Block& b = state.blocks[index];
  double top = world::kGroundY;
  for (int i = 0; i < static_cast<int>(state.blocks.size()); ++i) {
    if (i == index) continue;
    const Block& o = state.blocks[i];
    const bool overlaps = std::abs(o.x - b.x) < 0.9 * (o.half + b.half);
    // Only blocks underneath can support.
    if (overlaps && o.y < b.y) top = std::max(top, o.y + o.half);
  }
  return top + b.half;
}

void drop(WorldState& state, int index) { state.blocks[index].y = support_center_y(state, index); }

void follow_effector(WorldState& state) {
  if (state.attachment == Attachment::none || state.attached < 0) return;
  Block& b = state.blocks[state.attached];
  b.x = state.effector_x + state.offset_x;
  if (state.attachment == Attachment::grasp) {
    b.y = state.effector_y + state.offset_y;
  }
}

void attach(WorldState& state, int index, Attachment mode) {
  state.attachment = mode;
  state.attached = index;
  const Block& b = state.blocks[index];
  state.offset_x = b.x - state.effector_x;
  state.offset_y = b.y - state.effector_y;
}

void release(WorldState& state) {
  const int index = state.attached;
  state.attachment = Attachment::none;
  state.attached = -1;
  state.offset_x = state.offset_y = 0.0;
  if (index >= 0) drop(state, index);
}

Image render(const WorldState& state, int view, int size, const Appearance& appearance) {
  const Camera& cam = camera(view);
  // View 1 sees a dimmer, cooler scene.
  const double gain = appearance.light * (view == 0 ? 1.0 : 0.88);
  const std::array<double, 3> tint = view == 0 ? std::array<double, 3>{1.0, 1.0, 1.0}
                                               : std::array<double, 3>{0.94, 0.98, 1.06};

  std::vector<Rect> rects;
  rects.reserve(state.blocks.size() + 2);
  for (int i = 0; i < static_cast<int>(state.blocks.size()); ++i) {
    if (i == state.attached) continue;
    const Block& b = state.blocks[i];
    rects.push_back({b.x - b.half, b.y - b.half, b.x + b.half, b.y + b.half, kPalette[b.color % world::kNumColors]});
  }
  if (state.attached >= 0) {
    const Block& b = state.blocks[state.attached];
    rects.push_back({b.x - b.half, b.y - b.half, b.x + b.half, b.y + b.half, kPalette[b.color % world::kNumColors]});
  }
  const double ex = state.effector_x, ey = state.effector_y;
  rects.push_back({ex - 0.012, ey, ex + 0.012, 1.2, kGripper});
  rects.push_back({ex - world::kGripperHalfWidth, ey - world::kGripperHalfHeight, ex + world::kGripperHalfWidth,
                   ey + world::kGripperHalfHeight, kGripper});

  Image img(size);
  constexpr int kSub = 2;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      std::array<double, 3> acc{0.0, 0.0, 0.0};
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double u = (c + (sx + 0.5) / kSub) / size - cam.tx;
          const double v = (r + (sy + 0.5) / kSub) / size - cam.ty;
          const double x = cam.ia * u + cam.ib * v;
          const double y = cam.ic * u + cam.id * v;
          std::array<double, 3> color;
          if (x < -0.05 || x > 1.05 || y > 1.05 || y < -0.05) {
            color = kBorder;
          } else if (y < world::kGroundY) {
            color = kGround;
          } else {
            const double shade = 0.92 + 0.08 * y;
            color = {appearance.background[0] * shade, appearance.background[1] * shade,
                     appearance.background[2] * shade};
          }
          for (const Rect& rect : rects) {
            if (x >= rect.x0 && x <= rect.x1 && y >= rect.y0 && y <= rect.y1) color = rect.color;
          }
          for (int ch = 0; ch < 3; ++ch) acc[ch] += color[ch];
        }
      }
      for (int ch = 0; ch < 3; ++ch) {
        const double value = acc[ch] / (kSub * kSub) * gain * tint[ch] * 255.0;
        img.at(r, c, ch) = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
      }
    }
  }
  return img;
}

}  // namespace asn::dataio
