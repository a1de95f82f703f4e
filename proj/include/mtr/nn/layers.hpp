#pragma once

#include <torch/torch.h>

namespace mtr::nn {

/// x + IN(conv3(ReLU(IN(conv3_dilated(x))))) with reflection padding.
class ResidualBlockImpl : public torch::nn::Module {
 public:
  ResidualBlockImpl(int channels, int dilation);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(ResidualBlock);

/// 2-D convolution whose weight is divided by a power-iteration estimate of its
/// largest singular value. One iteration runs per forward in training mode;
/// eval mode reuses the stored (u, v).
class SNConv2dImpl : public torch::nn::Module {
 public:
  SNConv2dImpl(int in_channels, int out_channels, int kernel, int stride, int padding,
               bool spectral_norm = true);
  torch::Tensor forward(const torch::Tensor& x);

  /// The normalized weight used by forward, with no power iteration.
  torch::Tensor normalized_weight() const;
  /// Current sigma estimate.
  torch::Tensor sigma() const;
  void power_iteration();

  torch::Tensor weight;
  torch::Tensor bias;
  torch::Tensor u;
  torch::Tensor v;

 private:
  int stride_;
  int padding_;
  bool spectral_norm_;
};
TORCH_MODULE(SNConv2d);

}  // namespace mtr::nn
