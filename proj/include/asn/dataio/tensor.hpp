// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

#include <array>
#include <vector>

#include "asn/dataio/dataset.hpp"

namespace asn::dataio {

inline constexpr std::array<double, 3> kImageNetMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImageNetStd{0.229, 0.224, 0.225};

// Normalizes raw frames into an N x 3 x H x W float tensor:
// (value / 255 - mean_ch) / std_ch.
torch::Tensor to_tensor(const std::vector<const Image*>& images);
torch::Tensor to_tensor(const std::vector<Frame>& frames);
torch::Tensor to_tensor(const Image& image);

}  // namespace asn::dataio
