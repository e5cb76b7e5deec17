// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "asn/config.hpp"
#include "asn/dataio/dataset.hpp"
#include "asn/random.hpp"

namespace asn::dataio {

// Pixel-level operations; factors of exactly 1 are the identity.
Image adjust_brightness(const Image& img, double factor);
Image adjust_contrast(const Image& img, double factor);
Image adjust_saturation(const Image& img, double factor);
Image mirror_horizontal(const Image& img);
// Square crop keeping `area_fraction` of the frame, resized back to full size.
Image crop_and_resize(const Image& img, double area_fraction, double fx, double fy);

struct AugmentParams {
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  bool crop = false;
  double crop_area = 1.0;
  double crop_x = 0.0;
  double crop_y = 0.0;
  bool mirror = false;
};

AugmentParams draw_augment_params(Rng& rng, const AugmentConfig& config);
Frame apply_augment(const Frame& frame, const AugmentParams& params);

// Brightness, contrast and saturation jitter in that order, then the optional
// crop, then the horizontal mirror. Operates on raw frames; normalization
// happens afterwards in to_tensor().
Frame augment(const Frame& frame, Rng& rng, const AugmentConfig& config);

}  // namespace asn::dataio
