// SPDX-License-Identifier: Apache-2.0
#include "asn/dataio/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "asn/errors.hpp"

namespace asn::dataio {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_rgb(const std::uint8_t* data, int width, int height, const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw LoadError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw LoadError("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw LoadError("png: failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Raster read_rgb(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw LoadError("cannot open image " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LoadError("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LoadError("png: failed reading " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  // Normalize every color type to 8-bit RGB.
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  Raster out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  for (int y = 0; y < out.height; ++y) {
    png_read_row(png, out.rgb.data() + static_cast<std::size_t>(y) * out.width * 3, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  Raster r = read_rgb(path);
  if (r.width != r.height) {
    throw LoadError("frame " + path.string() + " is not square (" + std::to_string(r.width) + "x" +
                    std::to_string(r.height) + ")");
  }
  Image img;
  img.size = r.width;
  img.rgb = std::move(r.rgb);
  return img;
}

Raster read_png_raster(const std::filesystem::path& path) { return read_rgb(path); }

void write_png(const Image& image, const std::filesystem::path& path) {
  write_rgb(image.rgb.data(), image.size, image.size, path);
}

void write_png(const Raster& raster, const std::filesystem::path& path) {
  write_rgb(raster.rgb.data(), raster.width, raster.height, path);
}

Image resize_region(const Image& src, double x0, double y0, double edge, int out_size) {
  Image out(out_size);
  const double scale = edge / out_size;
  const int last = src.size - 1;
  for (int r = 0; r < out_size; ++r) {
    const double sy = std::clamp(y0 + (r + 0.5) * scale - 0.5, 0.0, static_cast<double>(last));
    const int y_lo = static_cast<int>(std::floor(sy));
    const int y_hi = std::min(y_lo + 1, last);
    const double fy = sy - y_lo;
    for (int c = 0; c < out_size; ++c) {
      const double sx = std::clamp(x0 + (c + 0.5) * scale - 0.5, 0.0, static_cast<double>(last));
      const int x_lo = static_cast<int>(std::floor(sx));
      const int x_hi = std::min(x_lo + 1, last);
      const double fx = sx - x_lo;
      for (int ch = 0; ch < 3; ++ch) {
        const double top = src.at(y_lo, x_lo, ch) * (1 - fx) + src.at(y_lo, x_hi, ch) * fx;
        const double bottom = src.at(y_hi, x_lo, ch) * (1 - fx) + src.at(y_hi, x_hi, ch) * fx;
        out.at(r, c, ch) = static_cast<std::uint8_t>(std::lround(std::clamp(top * (1 - fy) + bottom * fy, 0.0, 255.0)));
      }
    }
  }
  return out;
}

}  // namespace asn::dataio
