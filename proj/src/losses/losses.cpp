#include "mtr/losses/losses.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

#include "mtr/core/error.hpp"
#include "mtr/io/archive.hpp"
#include "mtr/io/json_fields.hpp"
#include "mtr/nn/convert.hpp"

namespace mtr::losses {

namespace F = torch::nn::functional;

void LossWeights::validate() const {
  for (double w : {alpha, beta, lambda_region, lambda_l1, lambda_perc, lambda_style, lambda_adv_g}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("loss weights must be finite and >= 0");
  }
  if (alpha + beta <= 0.0) throw InvalidArgument("alpha + beta must be positive");
}

nlohmann::json to_json(const LossWeights& w) {
  return {{"alpha", w.alpha},
          {"beta", w.beta},
          {"lambda_region", w.lambda_region},
          {"lambda_L1", w.lambda_l1},
          {"lambda_perc", w.lambda_perc},
          {"lambda_style", w.lambda_style},
          {"lambda_advG", w.lambda_adv_g},
          {"mask_refine_enabled", w.mask_refine_enabled}};
}

LossWeights loss_weights_from_json(const nlohmann::json& j) {
  LossWeights w;
  io::FieldReader r(j, "loss weights");
  r.get("alpha", w.alpha);
  r.get("beta", w.beta);
  r.get("lambda_region", w.lambda_region);
  r.get("lambda_L1", w.lambda_l1);
  r.get("lambda_perc", w.lambda_perc);
  r.get("lambda_style", w.lambda_style);
  r.get("lambda_advG", w.lambda_adv_g);
  r.get("mask_refine_enabled", w.mask_refine_enabled);
  r.finish();
  try {
    w.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(e.what());
  }
  return w;
}

void VggConfig::validate() const {
  if (widths.empty() || widths.size() != convs_per_stage.size()) {
    throw InvalidArgument("vgg widths and convs_per_stage must be nonempty and equally long");
  }
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] < 1 || convs_per_stage[i] < 1) throw InvalidArgument("vgg stages must be nonempty");
  }
}

nlohmann::json to_json(const VggConfig& c) {
  return {{"widths", c.widths},
          {"convs_per_stage", c.convs_per_stage},
          {"seed", c.seed},
          {"imagenet_normalize", c.imagenet_normalize}};
}

VggConfig vgg_config_from_json(const nlohmann::json& j) {
  VggConfig c;
  io::FieldReader r(j, "feature extractor config");
  r.get("widths", c.widths);
  r.get("convs_per_stage", c.convs_per_stage);
  r.get("seed", c.seed);
  r.get("imagenet_normalize", c.imagenet_normalize);
  r.finish();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(e.what());
  }
  return c;
}

VggFeatures::VggFeatures(VggConfig config) : config_(std::move(config)) {
  config_.validate();
  auto gen = at::detail::createCPUGenerator(config_.seed);
  int in = 3;
  for (std::size_t s = 0; s < config_.widths.size(); ++s) {
    std::vector<std::pair<torch::Tensor, torch::Tensor>> convs;
    for (int c = 0; c < config_.convs_per_stage[s]; ++c) {
      const int out = config_.widths[s];
      const double std = std::sqrt(2.0 / (in * 9));
      auto w = torch::randn({out, in, 3, 3}, gen, torch::kFloat32) * std;
      convs.emplace_back(w, torch::zeros({out}));
      in = out;
    }
    stages_.push_back(std::move(convs));
  }
}

std::shared_ptr<VggFeatures> VggFeatures::from_archive(const std::filesystem::path& path) {
  const auto archive = io::read_archive(path);
  auto fx = std::make_shared<VggFeatures>(vgg_config_from_json(archive.manifest.value("config", nlohmann::json::object())));
  for (std::size_t s = 0; s < fx->stages_.size(); ++s) {
    for (std::size_t c = 0; c < fx->stages_[s].size(); ++c) {
      auto& [w, b] = fx->stages_[s][c];
      const std::string stem = "stage" + std::to_string(s + 1) + ".conv" + std::to_string(c + 1);
      const auto* wr = archive.find(stem + ".weight");
      const auto* br = archive.find(stem + ".bias");
      if (!wr || !br) throw SchemaError("feature archive is missing " + stem);
      auto wt = nn::from_record(*wr).to(torch::kFloat32);
      auto bt = nn::from_record(*br).to(torch::kFloat32);
      if (wt.sizes() != w.sizes() || bt.sizes() != b.sizes()) {
        throw SchemaError("feature archive tensor " + stem + " has the wrong shape");
      }
      w = wt;
      b = bt;
    }
  }
  return fx;
}

void VggFeatures::to(torch::Dtype dtype) {
  for (auto& stage : stages_) {
    for (auto& [w, b] : stage) {
      w = w.to(dtype);
      b = b.to(dtype);
    }
  }
}

std::vector<torch::Tensor> VggFeatures::features(const torch::Tensor& input) const {
  auto x = input;
  if (config_.imagenet_normalize) {
    const auto opts = torch::TensorOptions().dtype(x.scalar_type());
    const auto mean = torch::tensor({0.485, 0.456, 0.406}, opts).view({1, 3, 1, 1});
    const auto std = torch::tensor({0.229, 0.224, 0.225}, opts).view({1, 3, 1, 1});
    x = (x - mean) / std;
  }
  std::vector<torch::Tensor> out;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    if (s > 0) x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2));
    for (const auto& [w, b] : stages_[s]) {
      x = torch::relu(F::conv2d(x, w, F::Conv2dFuncOptions().bias(b).padding(1)));
    }
    out.push_back(x);
  }
  return out;
}

namespace {

void check_same(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) {
    throw InvalidArgument(std::string(what) + ": extents differ (" + c10::str(a.sizes()) + " vs " +
                          c10::str(b.sizes()) + ")");
  }
}

void check_weights(const torch::Tensor& image, const torch::Tensor& w, const char* what) {
  if (image.dim() != 4 || w.dim() != 4 || w.size(1) != 1 || w.size(0) != image.size(0) ||
      w.size(2) != image.size(2) || w.size(3) != image.size(3)) {
    throw InvalidArgument(std::string(what) + ": weight map must be [N,1,H,W] matching the image");
  }
}

torch::Tensor resize_nearest(const torch::Tensor& w, std::int64_t h, std::int64_t wd) {
  if (w.size(2) == h && w.size(3) == wd) return w;
  return F::interpolate(w, F::InterpolateFuncOptions()
                               .size(std::vector<std::int64_t>{h, wd})
                               .mode(torch::kNearest));
}

}  // namespace

torch::Tensor tversky_loss(const torch::Tensor& pred, const torch::Tensor& gt, double alpha,
                           double beta, double eps) {
  check_same(pred, gt, "tversky_loss");
  const auto p = pred.flatten(1);
  const auto g = gt.flatten(1);
  const auto tp = (p * g).sum(1);
  const auto fp = (p * (1.0 - g)).sum(1);
  const auto fn = ((1.0 - p) * g).sum(1);
  const auto num = alpha * fp + beta * fn;
  return (num / (tp + num + eps)).mean();
}

torch::Tensor region_weight_mask(const torch::Tensor& box_mask, double lambda_region) {
  return lambda_region * box_mask + (1.0 - box_mask);
}

torch::Tensor weighted_l1(const torch::Tensor& pred, const torch::Tensor& gt,
                          const torch::Tensor& weights) {
  check_same(pred, gt, "weighted_l1");
  check_weights(pred, weights, "weighted_l1");
  return (gt * weights - pred * weights).abs().mean();
}

torch::Tensor gram(const torch::Tensor& features) {
  const auto f = features.flatten(2);
  return torch::bmm(f, f.transpose(1, 2));
}

FeatureLosses weighted_feature_losses(const torch::Tensor& pred, const torch::Tensor& gt,
                                      const torch::Tensor& weights, const FeatureExtractor& fx,
                                      const std::vector<torch::Tensor>* gt_features) {
  check_same(pred, gt, "weighted_feature_losses");
  check_weights(pred, weights, "weighted_feature_losses");
  const auto pf = fx.features(pred);
  const auto gf = gt_features ? *gt_features : fx.features(gt);
  if (pf.size() != gf.size()) throw InvalidArgument("feature stage counts differ");
  FeatureLosses out{torch::zeros({}, pred.options()), torch::zeros({}, pred.options())};
  for (std::size_t i = 0; i < pf.size(); ++i) {
    const auto w = resize_nearest(weights, pf[i].size(2), pf[i].size(3));
    const auto a = gf[i] * w;
    const auto b = pf[i] * w;
    out.perceptual = out.perceptual + (a - b).abs().mean();
    const double c = static_cast<double>(pf[i].size(1));
    const double chw = c * static_cast<double>(pf[i].size(2) * pf[i].size(3));
    out.style = out.style + ((gram(a) - gram(b)).abs().sum({1, 2}) / (c * c * chw)).mean();
  }
  return out;
}

torch::Tensor weighted_perceptual(const torch::Tensor& pred, const torch::Tensor& gt,
                                  const torch::Tensor& weights, const FeatureExtractor& fx) {
  return weighted_feature_losses(pred, gt, weights, fx).perceptual;
}

torch::Tensor weighted_style(const torch::Tensor& pred, const torch::Tensor& gt,
                             const torch::Tensor& weights, const FeatureExtractor& fx) {
  return weighted_feature_losses(pred, gt, weights, fx).style;
}

torch::Tensor hinge_g(const std::vector<torch::Tensor>& fake_scores) {
  if (fake_scores.empty()) throw InvalidArgument("hinge_g needs at least one score map");
  auto total = torch::zeros({}, fake_scores.front().options());
  for (const auto& s : fake_scores) total = total - s.mean();
  return total;
}

torch::Tensor hinge_d(const torch::Tensor& real_scores, const std::vector<torch::Tensor>& fake_scores) {
  if (fake_scores.empty()) throw InvalidArgument("hinge_d needs at least one fake score map");
  auto total = torch::relu(1.0 - real_scores).mean();
  for (const auto& s : fake_scores) total = total + torch::relu(1.0 + s).mean();
  return total;
}

torch::Tensor total_generator_loss(const LossParts& parts, const LossWeights& weights) {
  const std::pair<const char*, const torch::Tensor*> named[] = {
      {"L_MR", &parts.mask_refine}, {"L_L1", &parts.l1},         {"L_perc", &parts.perceptual},
      {"L_style", &parts.style},    {"L_advG", &parts.adv_g}};
  for (const auto& [name, t] : named) {
    if (!weights.mask_refine_enabled && t == &parts.mask_refine) continue;
    if (!t->defined()) throw InvalidArgument(std::string("loss component ") + name + " is missing");
    const double v = t->detach().item<double>();
    if (!std::isfinite(v)) {
      throw NumericError(name, std::string("loss component ") + name + " is not finite (" +
                                   std::to_string(v) + ")");
    }
  }
  auto total = weights.lambda_l1 * parts.l1 + weights.lambda_perc * parts.perceptual +
               weights.lambda_style * parts.style + weights.lambda_adv_g * parts.adv_g;
  if (weights.mask_refine_enabled) total = total + parts.mask_refine;
  return total;
}

}  // namespace mtr::losses
