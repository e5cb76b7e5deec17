// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

#include <vector>

#include "asn/config.hpp"
#include "asn/dataio/dataset.hpp"

namespace asn {

// Per-channel softmax over the H x W grid followed by the expected image
// coordinates. Input N x C x H x W, output N x 2C laid out (x_0, y_0, x_1, y_1, ...)
// with x running left to right and y top to bottom, both in [-1, 1].
torch::Tensor spatial_softmax(const torch::Tensor& features);

// Single-channel convenience form: C x H x W -> 2C.
torch::Tensor spatial_softmax_chw(const torch::Tensor& feature_map);

// Four strided convolution blocks, 1/4 input resolution.
class SmallBackboneImpl : public torch::nn::Module {
 public:
  SmallBackboneImpl();
  torch::Tensor forward(torch::Tensor x);
  static constexpr int kOutChannels = 32;
  static constexpr int kStride = 4;

 private:
  torch::nn::Sequential blocks_{nullptr};
};
TORCH_MODULE(SmallBackbone);

// Inception-v3 front end (stem + up to three mixed blocks). Parameter names follow
// the common Conv2d_1a_3x3 / Mixed_5b layout so external weights can be loaded.
class InceptionBackboneImpl : public torch::nn::Module {
 public:
  explicit InceptionBackboneImpl(int mixed_blocks);
  torch::Tensor forward(torch::Tensor x);
  int out_channels() const { return out_channels_; }

 private:
  torch::nn::Sequential stem_{nullptr};
  std::vector<torch::nn::AnyModule> mixed_;
  int out_channels_ = 0;
};
TORCH_MODULE(InceptionBackbone);

// E: frame -> R^n. Backbone, two 3x3 conv layers, spatial softmax, FC.
class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const EncoderConfig& config);

  // N x 3 x S x S normalized frames -> N x n. Throws ShapeError on size mismatch.
  torch::Tensor forward(torch::Tensor images);

  const EncoderConfig& config() const { return config_; }
  int embedding_dim() const { return config_.embedding_dim; }

 private:
  EncoderConfig config_;
  SmallBackbone small_{nullptr};
  InceptionBackbone full_{nullptr};
  torch::nn::Conv2d head1_{nullptr}, head2_{nullptr};
  torch::nn::BatchNorm2d head1_bn_{nullptr}, head2_bn_{nullptr};
  torch::Tensor log_inv_temperature_;  // learnable spatial softmax sharpness
  torch::nn::Linear fc_{nullptr};
};
TORCH_MODULE(Encoder);

// Inference-mode embedding of one raw frame (normalized internally): length-n vector.
torch::Tensor embed(Encoder& encoder, const dataio::Frame& frame);
torch::Tensor embed(Encoder& encoder, const dataio::Image& image);

// Order-preserving batched form; an empty list yields a 0 x n tensor.
torch::Tensor embed_sequence(Encoder& encoder, const std::vector<dataio::Frame>& frames);
torch::Tensor embed_images(Encoder& encoder, const std::vector<const dataio::Image*>& images);

}  // namespace asn
