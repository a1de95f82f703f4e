#include <string>

#include "mtr/core/error.hpp"
#include "mtr/nn/generator.hpp"

namespace mtr::nn {

namespace F = torch::nn::functional;
using torch::nn::Conv2d;
using torch::nn::Conv2dOptions;
using torch::nn::ConvTranspose2d;
using torch::nn::ConvTranspose2dOptions;
using torch::nn::InstanceNorm2d;
using torch::nn::InstanceNorm2dOptions;
using torch::nn::ReflectionPad2d;
using torch::nn::ReLU;

namespace {

Conv2d conv(int in, int out, int k, int stride = 1, int pad = 0, int dilation = 1,
            bool bias = false) {
  return Conv2d(Conv2dOptions(in, out, k).stride(stride).padding(pad).dilation(dilation).bias(bias));
}

InstanceNorm2d inorm(int c) { return InstanceNorm2d(InstanceNorm2dOptions(c)); }

torch::nn::Sequential attention_gate(int channels) {
  return torch::nn::Sequential(ReflectionPad2d(1), conv(channels, channels / 2, 3),
                               inorm(channels / 2), ReLU(), ReflectionPad2d(1),
                               conv(channels / 2, 1, 3), inorm(1), torch::nn::Sigmoid());
}

torch::Tensor squash_image(const torch::Tensor& x) { return (torch::tanh(x) + 1.0) * 0.5; }

void check_nchw(const torch::Tensor& t, std::int64_t channels, const char* what) {
  if (t.dim() != 4 || t.size(1) != channels) {
    throw InvalidArgument(std::string(what) + " must be [N," + std::to_string(channels) +
                          ",H,W], got " + c10::str(t.sizes()));
  }
}

}  // namespace

ResidualBlockImpl::ResidualBlockImpl(int channels, int dilation) {
  body_ = register_module(
      "body", torch::nn::Sequential(ReflectionPad2d(dilation),
                                    conv(channels, channels, 3, 1, 0, dilation), inorm(channels),
                                    ReLU(), ReflectionPad2d(1), conv(channels, channels, 3),
                                    inorm(channels)));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) { return x + body_->forward(x); }

SNConv2dImpl::SNConv2dImpl(int in_channels, int out_channels, int kernel, int stride, int padding,
                           bool spectral_norm)
    : stride_(stride), padding_(padding), spectral_norm_(spectral_norm) {
  // Same init as torch.nn.Conv2d.
  weight = register_parameter("weight", torch::empty({out_channels, in_channels, kernel, kernel}));
  torch::nn::init::kaiming_uniform_(weight, std::sqrt(5.0));
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kernel * kernel));
  bias = register_parameter("bias", torch::empty({out_channels}).uniform_(-bound, bound));
  u = register_buffer("u", F::normalize(torch::randn({out_channels}),
                                        F::NormalizeFuncOptions().dim(0).eps(1e-12)));
  v = register_buffer("v", F::normalize(torch::randn({in_channels * kernel * kernel}),
                                        F::NormalizeFuncOptions().dim(0).eps(1e-12)));
}

void SNConv2dImpl::power_iteration() {
  torch::NoGradGuard no_grad;
  const auto w = weight.reshape({weight.size(0), -1});
  const auto opts = F::NormalizeFuncOptions().dim(0).eps(1e-12);
  v.copy_(F::normalize(torch::mv(w.t(), u), opts));
  u.copy_(F::normalize(torch::mv(w, v), opts));
}

torch::Tensor SNConv2dImpl::sigma() const {
  return torch::dot(u, torch::mv(weight.reshape({weight.size(0), -1}), v));
}

torch::Tensor SNConv2dImpl::normalized_weight() const {
  return spectral_norm_ ? weight / sigma() : weight;
}

torch::Tensor SNConv2dImpl::forward(const torch::Tensor& x) {
  if (spectral_norm_ && is_training()) power_iteration();
  return F::conv2d(x, normalized_weight(),
                   F::Conv2dFuncOptions().bias(bias).stride(stride_).padding(padding_));
}

torch::nn::Sequential make_encoder(int in_channels, int base, int blocks, int dilation) {
  torch::nn::Sequential seq(ReflectionPad2d(3), conv(in_channels, base, 7), inorm(base), ReLU(),
                            conv(base, 2 * base, 4, 2, 1), inorm(2 * base), ReLU(),
                            conv(2 * base, 4 * base, 4, 2, 1), inorm(4 * base), ReLU());
  for (int i = 0; i < blocks; ++i) seq->push_back(ResidualBlock(4 * base, dilation));
  return seq;
}

namespace {

torch::nn::Sequential make_decoder(int base, int out_channels) {
  return torch::nn::Sequential(
      ConvTranspose2d(ConvTranspose2dOptions(4 * base, 2 * base, 4).stride(2).padding(1).bias(false)),
      inorm(2 * base), ReLU(),
      ConvTranspose2d(ConvTranspose2dOptions(2 * base, base, 4).stride(2).padding(1).bias(false)),
      inorm(base), ReLU(), ReflectionPad2d(3), conv(base, out_channels, 7, 1, 0, 1, true));
}

}  // namespace

BranchImpl::BranchImpl(int base, int blocks, int dilation, int out_channels) {
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int i = 0; i < blocks; ++i) blocks_->push_back(ResidualBlock(4 * base, dilation));
  tail_ = register_module("tail", make_decoder(base, out_channels));
}

torch::Tensor BranchImpl::block(std::size_t i, const torch::Tensor& x) {
  return blocks_[i]->as<ResidualBlock>()->forward(x);
}

torch::Tensor BranchImpl::decode(const torch::Tensor& x) { return tail_->forward(x); }

GeneratorImpl::GeneratorImpl(GeneratorConfig config) : config_(std::move(config)) {
  config_.validate();
  const int b = config_.base_channels;
  const int d = config_.dilation;
  trunk = register_module("trunk", make_encoder(4, b, config_.shared_residual_blocks, d));
  if (config_.use_mask_refine) {
    mr = register_module("mr", Branch(b, config_.branch_blocks(), d, 1));
    if (config_.use_attention) {
      attn = register_module("attn", std::make_shared<torch::nn::Module>("Attention"));
      for (int i = 0; i < config_.attention_blocks; ++i) {
        gates_.push_back(attn->register_module(std::to_string(i + 1), attention_gate(4 * b)));
      }
    }
  }
  ci = register_module("ci", Branch(b, config_.branch_blocks(), d, 3));
  if (config_.use_fine_branch) {
    const int fb = config_.fine_base_channels;
    fi = register_module("fi", make_encoder(4, fb, config_.residual_blocks_per_branch, d));
    fi->extend(*make_decoder(fb, 3));
  }
}

GeneratorTensors GeneratorImpl::forward(const torch::Tensor& input, const torch::Tensor& coarse_mask,
                                        const std::optional<torch::Tensor>& gt_mask_override) {
  check_nchw(input, 3, "input");
  check_nchw(coarse_mask, 1, "coarse mask");
  if (input.size(0) != coarse_mask.size(0) || input.size(2) != coarse_mask.size(2) ||
      input.size(3) != coarse_mask.size(3)) {
    throw InvalidArgument("input and coarse mask extents differ");
  }
  if (input.size(2) % 4 != 0 || input.size(3) % 4 != 0) {
    throw InvalidArgument("generator input height and width must be divisible by 4, got " +
                          c10::str(input.sizes()));
  }
  if (gt_mask_override) {
    check_nchw(*gt_mask_override, 1, "gt mask override");
    if (gt_mask_override->sizes() != coarse_mask.sizes()) {
      throw InvalidArgument("gt mask override extent differs from the coarse mask");
    }
  }

  GeneratorTensors out;
  const auto shared = trunk->forward(torch::cat({input, coarse_mask}, 1));
  auto x_ci = shared;
  if (config_.use_mask_refine) {
    auto x_mr = shared;
    for (std::size_t i = 0; i < mr->size(); ++i) {
      x_mr = mr->block(i, x_mr);
      if (config_.use_attention) {
        auto a = gates_[i]->forward(x_mr);
        x_ci = x_ci * a;
        out.attention.push_back(a);
      }
      x_ci = ci->block(i, x_ci);
    }
    out.refined_mask = torch::sigmoid(mr->decode(x_mr));
  } else {
    for (std::size_t i = 0; i < ci->size(); ++i) x_ci = ci->block(i, x_ci);
    out.refined_mask = coarse_mask;
  }
  out.coarse = squash_image(ci->decode(x_ci));
  out.coarse_composite = composite(out.coarse, input, out.refined_mask);

  if (config_.use_fine_branch) {
    const auto m = gt_mask_override ? *gt_mask_override : out.refined_mask.detach();
    out.fine = squash_image(fi->forward(torch::cat({out.coarse_composite, m}, 1)));
    out.fine_composite = composite(out.fine, input, out.refined_mask);
  } else {
    out.fine = out.coarse;
    out.fine_composite = out.coarse_composite;
  }
  return out;
}

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorConfig config) : config_(std::move(config)) {
  config_.validate();
  constexpr int strides[5] = {2, 2, 2, 1, 1};
  int in = 3;
  for (int i = 0; i < 5; ++i) {
    const int width = config_.channel_widths[i];
    layers_.push_back(register_module(
        std::to_string(i), SNConv2d(in, width, config_.kernel, strides[i], 1, config_.spectral_norm)));
    in = width + 1;
  }
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& image, const torch::Tensor& box_mask) {
  check_nchw(image, 3, "discriminator image");
  check_nchw(box_mask, 1, "discriminator mask");
  if (image.size(0) != box_mask.size(0) || image.size(2) != box_mask.size(2) ||
      image.size(3) != box_mask.size(3)) {
    throw InvalidArgument("discriminator image and mask extents differ");
  }
  auto x = image;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i > 0) {
      const auto m = F::interpolate(
          box_mask, F::InterpolateFuncOptions()
                        .size(std::vector<std::int64_t>{x.size(2), x.size(3)})
                        .mode(torch::kNearest));
      x = torch::cat({x, m}, 1);
    }
    x = layers_[i]->forward(x);
    if (i + 1 < layers_.size()) x = F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(config_.leaky_slope));
  }
  return x;
}

std::int64_t parameter_count(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

torch::Tensor composite(const torch::Tensor& pred, const torch::Tensor& original,
                        const torch::Tensor& mask) {
  return mask * pred + (1.0 - mask) * original;
}

}  // namespace mtr::nn
