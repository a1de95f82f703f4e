#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>

#include <json.hpp>

#include "mtr/data/augment.hpp"
#include "mtr/losses/losses.hpp"
#include "mtr/nn/config.hpp"

namespace mtr::train {

enum class Ablation { full, no_mask_refine_branch, no_attention, no_mask_refine_loss };

std::string to_string(Ablation a);
/// Accepts the names produced by to_string; throws InvalidArgument otherwise.
Ablation ablation_from_string(const std::string& s);

struct TrainConfig {
  int image_size = 256;
  int batch_size = 8;
  double g_lr = 1e-4;
  double d_lr_multiplier = 5.0;
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.9;
  double lr_drop_factor = 10.0;
  int max_lr_drops = 2;
  int plateau_window = 5000;
  double plateau_min_rel_improvement = 0.01;
  std::int64_t max_steps = 200000;
  std::uint64_t seed = 0;
  losses::LossWeights loss;
  Ablation ablation = Ablation::full;
  nn::GeneratorConfig generator;
  nn::DiscriminatorConfig discriminator;
  losses::VggConfig features;
  /// Pretrained feature archive; unset means seeded random weights.
  std::optional<std::string> feature_weights;
  data::AugmentOptions augment;

  void validate() const;
  /// Generator flags and loss weights with the ablation applied.
  nn::GeneratorConfig effective_generator() const;
  losses::LossWeights effective_loss() const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Fields present in `j` override `base`; unknown fields throw SchemaError.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Probability of feeding the fine branch the ground-truth mask:
/// max(1 - 0.1 * floor(step / 2000), 0.1).
double gt_replace_prob(std::int64_t step);

struct TrainState {
  std::int64_t step = 0;
  int drops_applied = 0;
  /// Total generator loss per step since the last drop, at most 2 windows long.
  std::deque<double> loss_history;
  std::mt19937_64 rng;

  double g_lr(const TrainConfig& c) const;
  double d_lr(const TrainConfig& c) const;
};

std::string serialize_rng(const std::mt19937_64& rng);
/// Throws SchemaError on malformed text.
std::mt19937_64 deserialize_rng(const std::string& text);

/// Appends `loss` and, once two full windows are present, compares their
/// medians. Drops the learning rate (returns true) when the relative
/// improvement is below the threshold and drops remain; the history is then
/// cleared. Without a drop the oldest entry is discarded.
bool record_loss_and_maybe_drop(TrainState& state, const TrainConfig& config, double loss);

/// The drop decision alone, for two explicit windows.
bool plateau_reached(const std::vector<double>& previous, const std::vector<double>& last,
                     double min_rel_improvement);

}  // namespace mtr::train
