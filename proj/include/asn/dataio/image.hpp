// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace asn::dataio {

// Square 8-bit RGB image, row-major, interleaved channels.
struct Image {
  int size = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  explicit Image(int edge) : size(edge), rgb(static_cast<std::size_t>(edge) * edge * 3, 0) {}

  std::uint8_t& at(int row, int col, int ch) {
    return rgb[(static_cast<std::size_t>(row) * size + col) * 3 + ch];
  }
  std::uint8_t at(int row, int col, int ch) const {
    return rgb[(static_cast<std::size_t>(row) * size + col) * 3 + ch];
  }
  bool operator==(const Image&) const = default;
};

// Generic RGB raster used by the plot writers; need not be square.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);
void write_png(const Raster& raster, const std::filesystem::path& path);
Raster read_png_raster(const std::filesystem::path& path);

// Bilinear resample of a square region [x0, x0+edge) x [y0, y0+edge) to `out_size`.
Image resize_region(const Image& src, double x0, double y0, double edge, int out_size);

}  // namespace asn::dataio
