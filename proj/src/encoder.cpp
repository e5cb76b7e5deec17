// SPDX-License-Identifier: Apache-2.0
#include "asn/encoder.hpp"

#include "asn/dataio/tensor.hpp"
#include "asn/errors.hpp"

namespace asn {
namespace nn = torch::nn;

namespace {

nn::Conv2d conv(int in, int out, int kernel, int stride = 1, int padding = 0, bool bias = true) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(bias));
}

// conv (no bias) + batch norm + relu
class BasicConvImpl : public nn::Module {
 public:
  BasicConvImpl(int in, int out, int kernel, int stride = 1, int padding = 0)
      : conv_(register_module("conv", conv(in, out, kernel, stride, padding, false))),
        bn_(register_module("bn", nn::BatchNorm2d(nn::BatchNorm2dOptions(out).eps(0.001)))) {}
  torch::Tensor forward(torch::Tensor x) { return torch::relu(bn_(conv_(x))); }

 private:
  nn::Conv2d conv_;
  nn::BatchNorm2d bn_;
};
TORCH_MODULE(BasicConv);

class InceptionAImpl : public nn::Module {
 public:
  InceptionAImpl(int in, int pool_features)
      : b1x1_(register_module("branch1x1", BasicConv(in, 64, 1))),
        b5x5_1_(register_module("branch5x5_1", BasicConv(in, 48, 1))),
        b5x5_2_(register_module("branch5x5_2", BasicConv(48, 64, 5, 1, 2))),
        b3x3_1_(register_module("branch3x3dbl_1", BasicConv(in, 64, 1))),
        b3x3_2_(register_module("branch3x3dbl_2", BasicConv(64, 96, 3, 1, 1))),
        b3x3_3_(register_module("branch3x3dbl_3", BasicConv(96, 96, 3, 1, 1))),
        bpool_(register_module("branch_pool", BasicConv(in, pool_features, 1))) {}

  torch::Tensor forward(torch::Tensor x) {
    auto a = b1x1_(x);
    auto b = b5x5_2_(b5x5_1_(x));
    auto c = b3x3_3_(b3x3_2_(b3x3_1_(x)));
    auto d = bpool_(torch::avg_pool2d(x, 3, 1, 1));
    return torch::cat({a, b, c, d}, 1);
  }

 private:
  BasicConv b1x1_, b5x5_1_, b5x5_2_, b3x3_1_, b3x3_2_, b3x3_3_, bpool_;
};
TORCH_MODULE(InceptionA);

}  // namespace

torch::Tensor spatial_softmax(const torch::Tensor& features) {
  TORCH_CHECK(features.dim() == 4, "spatial_softmax expects N x C x H x W");
  const auto n = features.size(0), c = features.size(1), h = features.size(2), w = features.size(3);
  auto opts = features.options();
  // linspace(-1, 1, 1) would be -1; a single cell sits at the center.
  auto xs = w > 1 ? torch::linspace(-1.0, 1.0, w, opts) : torch::zeros({1}, opts);
  auto ys = h > 1 ? torch::linspace(-1.0, 1.0, h, opts) : torch::zeros({1}, opts);
  auto probs = torch::softmax(features.reshape({n, c, h * w}), -1).reshape({n, c, h, w});
  auto ex = (probs.sum(2) * xs).sum(-1);  // N x C
  auto ey = (probs.sum(3) * ys).sum(-1);
  return torch::stack({ex, ey}, -1).reshape({n, 2 * c});
}

torch::Tensor spatial_softmax_chw(const torch::Tensor& feature_map) {
  return spatial_softmax(feature_map.unsqueeze(0)).squeeze(0);
}

SmallBackboneImpl::SmallBackboneImpl() {
  blocks_ = register_module("blocks", nn::Sequential(BasicConv(3, 16, 5, 2, 2), BasicConv(16, 32, 3, 2, 1),
                                                     BasicConv(32, 32, 3, 1, 1), BasicConv(32, kOutChannels, 3, 1, 1)));
}

torch::Tensor SmallBackboneImpl::forward(torch::Tensor x) { return blocks_->forward(x); }

InceptionBackboneImpl::InceptionBackboneImpl(int mixed_blocks) {
  nn::Sequential stem;
  stem->push_back("Conv2d_1a_3x3", BasicConv(3, 32, 3, 2));
  stem->push_back("Conv2d_2a_3x3", BasicConv(32, 32, 3));
  stem->push_back("Conv2d_2b_3x3", BasicConv(32, 64, 3, 1, 1));
  stem->push_back("maxpool1", nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2)));
  stem->push_back("Conv2d_3b_1x1", BasicConv(64, 80, 1));
  stem->push_back("Conv2d_4a_3x3", BasicConv(80, 192, 3));
  stem->push_back("maxpool2", nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2)));
  stem_ = register_module("stem", stem);
  const std::array<std::pair<const char*, std::pair<int, int>>, 3> blocks{
      {{"Mixed_5b", {192, 32}}, {"Mixed_5c", {256, 64}}, {"Mixed_5d", {288, 64}}}};
  out_channels_ = 192;
  for (int i = 0; i < mixed_blocks && i < 3; ++i) {
    auto block = register_module(blocks[i].first, InceptionA(blocks[i].second.first, blocks[i].second.second));
    mixed_.emplace_back(block);
    out_channels_ = 224 + blocks[i].second.second;
  }
}

torch::Tensor InceptionBackboneImpl::forward(torch::Tensor x) {
  x = stem_->forward(x);
  for (auto& block : mixed_) x = block.forward(x);
  return x;
}

EncoderImpl::EncoderImpl(const EncoderConfig& config) : config_(config) {
  int channels = 0;
  if (config_.backbone == Backbone::small) {
    if (config_.input_size % SmallBackboneImpl::kStride != 0) {
      throw ShapeError("small backbone needs input_size divisible by " + std::to_string(SmallBackboneImpl::kStride));
    }
    small_ = register_module("backbone", SmallBackbone());
    channels = SmallBackboneImpl::kOutChannels;
  } else {
    if (config_.input_size < 75) throw ShapeError("full backbone needs input_size >= 75");
    full_ = register_module("backbone", InceptionBackbone(config_.inception_blocks));
    channels = full_->out_channels();
    if (!config_.pretrained_path.empty()) torch::load(full_, config_.pretrained_path);
  }
  const int width = config_.feature_channels;
  head1_ = register_module("head1", conv(channels, width, 3, 1, 1, false));
  head2_ = register_module("head2", conv(width, width, 3, 1, 1, false));
  head1_bn_ = register_module("head1_bn", nn::BatchNorm2d(width));
  head2_bn_ = register_module("head2_bn", nn::BatchNorm2d(width));
  log_inv_temperature_ = register_parameter("log_inv_temperature", torch::zeros({1}));
  fc_ = register_module("fc", nn::Linear(2 * width, config_.embedding_dim));
}

torch::Tensor EncoderImpl::forward(torch::Tensor images) {
  const int s = config_.input_size;
  if (images.dim() != 4 || images.size(1) != 3 || images.size(2) != s || images.size(3) != s) {
    throw ShapeError("encoder expects N x 3 x " + std::to_string(s) + " x " + std::to_string(s) + " input, got " +
                     c10::str(images.sizes()));
  }
  auto x = small_ ? small_->forward(images) : full_->forward(images);
  x = torch::relu(head1_bn_(head1_(x)));
  x = head2_bn_(head2_(x));
  auto out = fc_(spatial_softmax(x * log_inv_temperature_.exp()));
  if (config_.l2_normalize) out = torch::nn::functional::normalize(out, torch::nn::functional::NormalizeFuncOptions().dim(1));
  return out;
}

torch::Tensor embed_images(Encoder& encoder, const std::vector<const dataio::Image*>& images) {
  if (images.empty()) return torch::zeros({0, encoder->embedding_dim()});
  const bool was_training = encoder->is_training();
  encoder->eval();
  torch::NoGradGuard no_grad;
  constexpr std::size_t kChunk = 64;
  std::vector<torch::Tensor> parts;
  for (std::size_t i = 0; i < images.size(); i += kChunk) {
    std::vector<const dataio::Image*> chunk(images.begin() + i, images.begin() + std::min(images.size(), i + kChunk));
    const auto param = encoder->parameters().front();
    parts.push_back(encoder->forward(dataio::to_tensor(chunk).to(param.dtype())));
  }
  encoder->train(was_training);
  return torch::cat(parts, 0);
}

torch::Tensor embed_sequence(Encoder& encoder, const std::vector<dataio::Frame>& frames) {
  std::vector<const dataio::Image*> images;
  images.reserve(frames.size());
  for (const auto& f : frames) images.push_back(&f.pixels);
  return embed_images(encoder, images);
}

torch::Tensor embed(Encoder& encoder, const dataio::Image& image) {
  return embed_images(encoder, {&image}).squeeze(0);
}

torch::Tensor embed(Encoder& encoder, const dataio::Frame& frame) { return embed(encoder, frame.pixels); }

}  // namespace asn
