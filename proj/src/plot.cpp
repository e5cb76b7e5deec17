// SPDX-License-Identifier: Apache-2.0
#include "asn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asn::plot {

Rgb colormap(double t) {
  static constexpr std::array<std::array<double, 3>, 5> anchors{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (anchors.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(t), anchors.size() - 2);
  const double f = t - static_cast<double>(i);
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    out[c] = static_cast<std::uint8_t>(std::lround(anchors[i][c] + f * (anchors[i + 1][c] - anchors[i][c])));
  }
  return out;
}

Canvas::Canvas(int width, int height, double x_min, double x_max, double y_min, double y_max)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
  if (width <= 2 * kMargin || height <= 2 * kMargin) throw std::invalid_argument("canvas too small");
  if (!(x_max > x_min)) x_max_ = x_min + 1.0;
  if (!(y_max > y_min)) y_max_ = y_min + 1.0;
  raster_.width = width;
  raster_.height = height;
  raster_.rgb.assign(static_cast<std::size_t>(width) * height * 3, 255);
}

int Canvas::to_px(double x) const {
  const double f = (x - x_min_) / (x_max_ - x_min_);
  return kMargin + static_cast<int>(std::lround(f * (raster_.width - 2 * kMargin - 1)));
}

int Canvas::to_py(double y) const {
  const double f = (y - y_min_) / (y_max_ - y_min_);
  return raster_.height - 1 - kMargin - static_cast<int>(std::lround(f * (raster_.height - 2 * kMargin - 1)));
}

void Canvas::set(int px, int py, Rgb color) {
  if (px < 0 || py < 0 || px >= raster_.width || py >= raster_.height) return;
  auto* p = &raster_.rgb[(static_cast<std::size_t>(py) * raster_.width + px) * 3];
  p[0] = color[0];
  p[1] = color[1];
  p[2] = color[2];
}

void Canvas::axes() {
  const Rgb gray{90, 90, 90};
  line(x_min_, y_min_, x_max_, y_min_, gray);
  line(x_min_, y_min_, x_min_, y_max_, gray);
}

void Canvas::line(double x0, double y0, double x1, double y1, Rgb color, int thickness) {
  int ax = to_px(x0), ay = to_py(y0);
  const int bx = to_px(x1), by = to_py(y1);
  const int dx = std::abs(bx - ax), dy = -std::abs(by - ay);
  const int sx = ax < bx ? 1 : -1, sy = ay < by ? 1 : -1;
  int err = dx + dy;
  const int r = thickness / 2;
  while (true) {
    for (int oy = -r; oy <= r; ++oy)
      for (int ox = -r; ox <= r; ++ox) set(ax + ox, ay + oy, color);
    if (ax == bx && ay == by) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      ax += sx;
    }
    if (e2 <= dx) {
      err += dx;
      ay += sy;
    }
  }
}

void Canvas::polyline(const std::vector<double>& xs, const std::vector<double>& ys, Rgb color, int thickness) {
  for (std::size_t i = 1; i < xs.size() && i < ys.size(); ++i) line(xs[i - 1], ys[i - 1], xs[i], ys[i], color, thickness);
}

void Canvas::dot(double x, double y, int radius, Rgb color) {
  const int cx = to_px(x), cy = to_py(y);
  for (int oy = -radius; oy <= radius; ++oy)
    for (int ox = -radius; ox <= radius; ++ox)
      if (ox * ox + oy * oy <= radius * radius) set(cx + ox, cy + oy, color);
}

}  // namespace asn::plot
