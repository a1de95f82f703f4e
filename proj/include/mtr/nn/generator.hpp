#pragma once

#include <optional>
#include <vector>

#include <torch/torch.h>

#include "mtr/nn/config.hpp"
#include "mtr/nn/layers.hpp"

namespace mtr::nn {

/// Batched generator outputs, NCHW in [0,1].
struct GeneratorTensors {
  torch::Tensor refined_mask;
  torch::Tensor coarse;
  torch::Tensor coarse_composite;
  torch::Tensor fine;
  torch::Tensor fine_composite;
  /// One map per attention gate at trunk resolution; empty when attention is off.
  std::vector<torch::Tensor> attention;
};

/// Residual blocks after the shared trunk, followed by the upsampling back-end
/// and a 7x7 head.
class BranchImpl : public torch::nn::Module {
 public:
  BranchImpl(int base, int blocks, int dilation, int out_channels);
  torch::Tensor block(std::size_t i, const torch::Tensor& x);
  std::size_t size() const { return blocks_->size(); }
  /// Back-end and head, without the output squashing.
  torch::Tensor decode(const torch::Tensor& x);

 private:
  torch::nn::ModuleList blocks_{nullptr};
  torch::nn::Sequential tail_{nullptr};
};
TORCH_MODULE(Branch);

/// Front-end (7x7/s1, 4x4/s2, 4x4/s2) followed by `blocks` residual blocks.
torch::nn::Sequential make_encoder(int in_channels, int base, int blocks, int dilation);

class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(GeneratorConfig config = {});

  /// input [N,3,H,W], coarse_mask [N,1,H,W]; H and W divisible by 4. When given,
  /// gt_mask_override replaces the refined mask as the fine branch input.
  GeneratorTensors forward(const torch::Tensor& input, const torch::Tensor& coarse_mask,
                           const std::optional<torch::Tensor>& gt_mask_override = std::nullopt);

  const GeneratorConfig& config() const { return config_; }

  torch::nn::Sequential trunk{nullptr};
  Branch mr{nullptr};
  Branch ci{nullptr};
  /// Children named "1".."4".
  std::shared_ptr<torch::nn::Module> attn;
  torch::nn::Sequential fi{nullptr};

 private:
  GeneratorConfig config_;
  std::vector<torch::nn::Sequential> gates_;
};
TORCH_MODULE(Generator);

/// Spectral-normalized patch discriminator conditioned on the box mask, which
/// is concatenated (nearest resized) before layers 2 to 5.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(DiscriminatorConfig config = {});

  /// image [N,3,H,W], box_mask [N,1,H,W] -> unbounded scores [N,1,h,w].
  torch::Tensor forward(const torch::Tensor& image, const torch::Tensor& box_mask);

  const DiscriminatorConfig& config() const { return config_; }
  std::vector<SNConv2d>& layers() { return layers_; }

 private:
  DiscriminatorConfig config_;
  std::vector<SNConv2d> layers_;
};
TORCH_MODULE(Discriminator);

/// Trainable parameters of Generator(GeneratorConfig{}).
inline constexpr std::int64_t kDefaultGeneratorParameters = 17'080'039;

std::int64_t parameter_count(const torch::nn::Module& module);

/// I_c = m * pred + (1 - m) * original, broadcasting m over channels.
torch::Tensor composite(const torch::Tensor& pred, const torch::Tensor& original,
                        const torch::Tensor& mask);

}  // namespace mtr::nn
