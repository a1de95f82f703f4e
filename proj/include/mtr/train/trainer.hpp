#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "mtr/core/image.hpp"
#include "mtr/data/augment.hpp"
#include "mtr/losses/losses.hpp"
#include "mtr/nn/generator.hpp"
#include "mtr/train/config.hpp"

namespace mtr::train {

struct StepMetrics {
  /// Number of completed steps after this update.
  std::int64_t step = 0;
  double l_mr = 0.0;
  double l_l1 = 0.0;
  double l_perc = 0.0;
  double l_style = 0.0;
  double l_adv_g = 0.0;
  double l_d = 0.0;
  double total_g = 0.0;
  double g_lr = 0.0;
  double gt_replace_p = 0.0;
  bool gt_mask_used = false;
  bool lr_dropped = false;
};

/// One metrics-stream record: {step, L_MR, L_L1, L_perc, L_style, L_advG, L_D, g_lr, gt_replace_p}.
nlohmann::json to_json(const StepMetrics& m);

enum class Phase { discriminator, generator };

/// Batched tensors for one training step.
struct Batch {
  torch::Tensor input;
  torch::Tensor coarse_mask;
  torch::Tensor box_mask;
  torch::Tensor target;
  torch::Tensor gt_mask;
};

Batch make_batch(const std::vector<data::AugmentedSample>& samples);

class Trainer {
 public:
  /// Builds fresh networks from `config.seed`. `data` must be nonempty and
  /// every sample must be image_size x image_size.
  Trainer(TrainConfig config, std::vector<AnnotatedSample> data);

  /// Draws a batch and the gt-mask decision from the state rng, then updates
  /// D and G once each.
  StepMetrics step();
  /// The update itself on an explicit batch.
  StepMetrics train_on(const Batch& batch, bool use_gt_mask);

  /// Writes networks, optimizer moments and the train state.
  void save(const std::filesystem::path& path) const;
  /// Validates the whole archive against this trainer before changing anything.
  void load(const std::filesystem::path& path);

  /// Overrides the current learning rates (does not touch drops_applied).
  void set_learning_rates(double g_lr, double d_lr);
  double g_lr() const;
  double d_lr() const;

  /// Called after each optimizer update inside train_on.
  void set_phase_observer(std::function<void(Phase)> observer) { observer_ = std::move(observer); }

  nn::Generator& generator() { return generator_; }
  nn::Discriminator& discriminator() { return discriminator_; }
  const TrainConfig& config() const { return config_; }
  const TrainState& state() const { return state_; }
  const losses::FeatureExtractor& features() const { return *features_; }

 private:
  TrainConfig config_;
  losses::LossWeights weights_;
  std::vector<AnnotatedSample> data_;
  nn::Generator generator_{nullptr};
  nn::Discriminator discriminator_{nullptr};
  std::shared_ptr<losses::FeatureExtractor> features_;
  std::unique_ptr<torch::optim::Adam> g_opt_;
  std::unique_ptr<torch::optim::Adam> d_opt_;
  TrainState state_;
  std::function<void(Phase)> observer_;
};

}  // namespace mtr::train
