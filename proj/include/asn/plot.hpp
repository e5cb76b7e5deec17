// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "asn/dataio/image.hpp"

namespace asn::plot {

using Rgb = std::array<std::uint8_t, 3>;

// Perceptually ordered dark-blue -> green -> yellow map for t in [0, 1].
Rgb colormap(double t);

// Minimal raster canvas with a fixed data window and margins. No text rendering.
class Canvas {
 public:
  Canvas(int width, int height, double x_min, double x_max, double y_min, double y_max);

  void axes();
  void line(double x0, double y0, double x1, double y1, Rgb color, int thickness = 1);
  void polyline(const std::vector<double>& xs, const std::vector<double>& ys, Rgb color, int thickness = 2);
  void dot(double x, double y, int radius, Rgb color);

  const dataio::Raster& raster() const { return raster_; }

 private:
  void set(int px, int py, Rgb color);
  int to_px(double x) const;
  int to_py(double y) const;

  dataio::Raster raster_;
  double x_min_, x_max_, y_min_, y_max_;
  static constexpr int kMargin = 24;
};

}  // namespace asn::plot
