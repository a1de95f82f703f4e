#pragma once

#include <vector>

#include <json.hpp>

namespace mtr::nn {

struct GeneratorConfig {
  int base_channels = 64;
  /// Width of the fine branch front-end; the mid-section runs at 4x this.
  int fine_base_channels = 32;
  int residual_blocks_per_branch = 6;
  int shared_residual_blocks = 2;
  int attention_blocks = 4;
  int dilation = 2;
  bool use_mask_refine = true;
  bool use_attention = true;
  bool use_fine_branch = true;

  int branch_blocks() const { return residual_blocks_per_branch - shared_residual_blocks; }
  /// Throws InvalidArgument on inconsistent counts or widths.
  void validate() const;
  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

struct DiscriminatorConfig {
  /// Output widths of the five layers; strides are fixed at (2, 2, 2, 1, 1).
  std::vector<int> channel_widths{64, 128, 256, 512, 1};
  int kernel = 4;
  double leaky_slope = 0.2;
  bool spectral_norm = true;

  void validate() const;
  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

nlohmann::json to_json(const GeneratorConfig& config);
nlohmann::json to_json(const DiscriminatorConfig& config);
/// Missing keys keep the defaults; unknown keys and wrong types throw SchemaError.
GeneratorConfig generator_config_from_json(const nlohmann::json& j);
DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j);

/// Receptive field, in trunk pixels, of a stack of residual blocks whose first
/// conv is 3x3 with the given dilation and whose second conv is a plain 3x3.
int residual_stack_receptive_field(int blocks, int dilation);

/// Side of the patch score map for a square input of side `input`.
int discriminator_output_size(int input, const DiscriminatorConfig& config);

}  // namespace mtr::nn
