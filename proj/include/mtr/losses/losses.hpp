#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

namespace mtr::losses {

struct LossWeights {
  double alpha = 0.1;
  double beta = 0.9;
  double lambda_region = 10.0;
  double lambda_l1 = 2.5;
  double lambda_perc = 0.05;
  double lambda_style = 12.5;
  double lambda_adv_g = 0.05;
  bool mask_refine_enabled = true;

  void validate() const;
};

nlohmann::json to_json(const LossWeights& w);
LossWeights loss_weights_from_json(const nlohmann::json& j);

/// Frozen multi-stage feature network. Implementations must be deterministic
/// and safe to share across threads.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  /// x [N,3,H,W] -> one activation map per stage.
  virtual std::vector<torch::Tensor> features(const torch::Tensor& x) const = 0;
};

/// VGG-style stages of 3x3 conv + ReLU, features taken before each 2x2 max pool.
struct VggConfig {
  std::vector<int> widths{64, 128, 256, 512, 512};
  std::vector<int> convs_per_stage{2, 2, 4, 4, 4};
  std::uint64_t seed = 0;
  /// Subtract the ImageNet mean and divide by its std before the first conv.
  bool imagenet_normalize = false;

  void validate() const;
};

nlohmann::json to_json(const VggConfig& c);
VggConfig vgg_config_from_json(const nlohmann::json& j);

class VggFeatures : public FeatureExtractor {
 public:
  /// Seeded Kaiming-normal weights, independent of the global torch generator.
  explicit VggFeatures(VggConfig config);
  /// Loads convolution weights from a tensor archive whose manifest holds the
  /// VggConfig and whose tensors are named "stage{s}.conv{c}.weight|bias".
  static std::shared_ptr<VggFeatures> from_archive(const std::filesystem::path& path);

  std::vector<torch::Tensor> features(const torch::Tensor& x) const override;
  const VggConfig& config() const { return config_; }
  void to(torch::Dtype dtype);

 private:
  VggConfig config_;
  std::vector<std::vector<std::pair<torch::Tensor, torch::Tensor>>> stages_;
};

/// Per-sample (a*FP + b*FN) / (TP + a*FP + b*FN + eps), averaged over the batch.
torch::Tensor tversky_loss(const torch::Tensor& pred, const torch::Tensor& gt, double alpha,
                           double beta, double eps = 1e-6);

/// lambda inside the box mask, 1 outside.
torch::Tensor region_weight_mask(const torch::Tensor& box_mask, double lambda_region);

/// Element mean of |gt * w - pred * w|, w broadcast over channels.
torch::Tensor weighted_l1(const torch::Tensor& pred, const torch::Tensor& gt,
                          const torch::Tensor& weights);

struct FeatureLosses {
  torch::Tensor perceptual;
  torch::Tensor style;
};

/// Perceptual and style terms from one feature pass. Per stage, perceptual is
/// the element mean of |phi(gt) w - phi(pred) w| and style is the mean over the
/// C x C entries of |Gram(phi(gt) w) - Gram(phi(pred) w)| / (C H W). `weights` is the M_w map
/// at input resolution; it is nearest-resized to every stage. `gt_features`
/// may be passed in to reuse a previous extraction.
FeatureLosses weighted_feature_losses(const torch::Tensor& pred, const torch::Tensor& gt,
                                      const torch::Tensor& weights, const FeatureExtractor& fx,
                                      const std::vector<torch::Tensor>* gt_features = nullptr);

torch::Tensor weighted_perceptual(const torch::Tensor& pred, const torch::Tensor& gt,
                                  const torch::Tensor& weights, const FeatureExtractor& fx);
torch::Tensor weighted_style(const torch::Tensor& pred, const torch::Tensor& gt,
                             const torch::Tensor& weights, const FeatureExtractor& fx);

/// Batched Gram matrices: [N,C,H,W] -> [N,C,C].
torch::Tensor gram(const torch::Tensor& features);

/// -sum_k mean(score_k).
torch::Tensor hinge_g(const std::vector<torch::Tensor>& fake_scores);
/// mean(relu(1 - real)) + sum_k mean(relu(1 + fake_k)).
torch::Tensor hinge_d(const torch::Tensor& real_scores, const std::vector<torch::Tensor>& fake_scores);

struct LossParts {
  torch::Tensor mask_refine;
  torch::Tensor l1;
  torch::Tensor perceptual;
  torch::Tensor style;
  torch::Tensor adv_g;
};

/// Weighted sum; the mask term is dropped when mask refinement is disabled.
/// Throws NumericError naming the first non-finite component.
torch::Tensor total_generator_loss(const LossParts& parts, const LossWeights& weights);

}  // namespace mtr::losses
