// SPDX-License-Identifier: Apache-2.0
#include "asn/dataio/tensor.hpp"

#include "asn/errors.hpp"

namespace asn::dataio {

torch::Tensor to_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) return torch::empty({0, 3, 0, 0});
  const int edge = images.front()->size;
  const auto n = static_cast<std::int64_t>(images.size());
  auto out = torch::empty({n, 3, edge, edge}, torch::kFloat32);
  auto acc = out.accessor<float, 4>();
  for (std::int64_t i = 0; i < n; ++i) {
    const Image& img = *images[i];
    if (img.size != edge) throw ShapeError("to_tensor: frames of different sizes in one batch");
    for (int ch = 0; ch < 3; ++ch) {
      const double mean = kImageNetMean[ch];
      const double inv_std = 1.0 / kImageNetStd[ch];
      for (int r = 0; r < edge; ++r) {
        for (int c = 0; c < edge; ++c) {
          acc[i][ch][r][c] = static_cast<float>((img.at(r, c, ch) / 255.0 - mean) * inv_std);
        }
      }
    }
  }
  return out;
}

torch::Tensor to_tensor(const std::vector<Frame>& frames) {
  std::vector<const Image*> images;
  images.reserve(frames.size());
  for (const auto& f : frames) images.push_back(&f.pixels);
  return to_tensor(images);
}

torch::Tensor to_tensor(const Image& image) { return to_tensor(std::vector<const Image*>{&image}); }

}  // namespace asn::dataio
