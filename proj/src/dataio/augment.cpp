// SPDX-License-Identifier: Apache-2.0
#include "asn/dataio/augment.hpp"

#include <algorithm>
#include <cmath>

namespace asn::dataio {
namespace {

std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))); }

double luma(const Image& img, std::size_t p) {
  return 0.299 * img.rgb[p * 3] + 0.587 * img.rgb[p * 3 + 1] + 0.114 * img.rgb[p * 3 + 2];
}

double draw(Rng& rng, double lo, double hi) { return lo == hi ? lo : uniform(rng, lo, hi); }

}  // namespace

Image adjust_brightness(const Image& img, double factor) {
  if (factor == 1.0) return img;
  Image out = img;
  for (auto& v : out.rgb) v = to_u8(v * factor);
  return out;
}

Image adjust_contrast(const Image& img, double factor) {
  if (factor == 1.0) return img;
  const std::size_t pixels = static_cast<std::size_t>(img.size) * img.size;
  double mean = 0.0;
  for (std::size_t p = 0; p < pixels; ++p) mean += luma(img, p);
  mean /= static_cast<double>(pixels);
  Image out = img;
  for (auto& v : out.rgb) v = to_u8((v - mean) * factor + mean);
  return out;
}

Image adjust_saturation(const Image& img, double factor) {
  if (factor == 1.0) return img;
  const std::size_t pixels = static_cast<std::size_t>(img.size) * img.size;
  Image out = img;
  for (std::size_t p = 0; p < pixels; ++p) {
    const double gray = luma(img, p);
    for (int ch = 0; ch < 3; ++ch) out.rgb[p * 3 + ch] = to_u8((img.rgb[p * 3 + ch] - gray) * factor + gray);
  }
  return out;
}

Image mirror_horizontal(const Image& img) {
  Image out(img.size);
  for (int r = 0; r < img.size; ++r) {
    for (int c = 0; c < img.size; ++c) {
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = img.at(r, img.size - 1 - c, ch);
    }
  }
  return out;
}

Image crop_and_resize(const Image& img, double area_fraction, double fx, double fy) {
  const double edge = img.size * std::sqrt(std::clamp(area_fraction, 0.0, 1.0));
  const double slack = img.size - edge;
  return resize_region(img, slack * std::clamp(fx, 0.0, 1.0), slack * std::clamp(fy, 0.0, 1.0), edge, img.size);
}

AugmentParams draw_augment_params(Rng& rng, const AugmentConfig& config) {
  AugmentParams p;
  if (!config.enabled) return p;
  p.brightness = draw(rng, config.brightness_min, config.brightness_max);
  p.contrast = draw(rng, config.contrast_min, config.contrast_max);
  p.saturation = draw(rng, config.saturation_min, config.saturation_max);
  if (config.crop) {
    p.crop = true;
    p.crop_area = draw(rng, config.crop_min_area, 1.0);
    p.crop_x = uniform(rng, 0.0, 1.0);
    p.crop_y = uniform(rng, 0.0, 1.0);
  }
  p.mirror = bernoulli(rng, config.mirror_prob);
  return p;
}

Frame apply_augment(const Frame& frame, const AugmentParams& p) {
  Frame out = frame;
  out.pixels = adjust_saturation(adjust_contrast(adjust_brightness(out.pixels, p.brightness), p.contrast), p.saturation);
  if (p.crop) out.pixels = crop_and_resize(out.pixels, p.crop_area, p.crop_x, p.crop_y);
  if (p.mirror) out.pixels = mirror_horizontal(out.pixels);
  return out;
}

Frame augment(const Frame& frame, Rng& rng, const AugmentConfig& config) {
  if (!config.enabled) return frame;
  return apply_augment(frame, draw_augment_params(rng, config));
}

}  // namespace asn::dataio
