#include "mtr/nn/config.hpp"

#include "mtr/core/error.hpp"
#include "mtr/io/json_fields.hpp"

namespace mtr::nn {

void GeneratorConfig::validate() const {
  if (base_channels < 1 || fine_base_channels < 1) {
    throw InvalidArgument("generator widths must be positive");
  }
  if (shared_residual_blocks < 0 || residual_blocks_per_branch < shared_residual_blocks) {
    throw InvalidArgument("residual_blocks_per_branch must be >= shared_residual_blocks >= 0");
  }
  if (attention_blocks != branch_blocks()) {
    throw InvalidArgument("attention_blocks (" + std::to_string(attention_blocks) +
                          ") must equal residual_blocks_per_branch - shared_residual_blocks (" +
                          std::to_string(branch_blocks()) + ")");
  }
  if (dilation < 1) throw InvalidArgument("dilation must be >= 1");
}

void DiscriminatorConfig::validate() const {
  if (channel_widths.size() != 5) throw InvalidArgument("discriminator needs exactly 5 widths");
  for (int w : channel_widths) {
    if (w < 1) throw InvalidArgument("discriminator widths must be positive");
  }
  if (kernel < 2) throw InvalidArgument("discriminator kernel must be >= 2");
  if (leaky_slope < 0.0) throw InvalidArgument("leaky_slope must be >= 0");
}

nlohmann::json to_json(const GeneratorConfig& c) {
  return {{"base_channels", c.base_channels},
          {"fine_base_channels", c.fine_base_channels},
          {"residual_blocks_per_branch", c.residual_blocks_per_branch},
          {"shared_residual_blocks", c.shared_residual_blocks},
          {"attention_blocks", c.attention_blocks},
          {"dilation", c.dilation},
          {"use_mask_refine", c.use_mask_refine},
          {"use_attention", c.use_attention},
          {"use_fine_branch", c.use_fine_branch}};
}

nlohmann::json to_json(const DiscriminatorConfig& c) {
  return {{"channel_widths", c.channel_widths},
          {"kernel", c.kernel},
          {"leaky_slope", c.leaky_slope},
          {"spectral_norm", c.spectral_norm}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  io::FieldReader r(j, "generator_config");
  r.get("base_channels", c.base_channels);
  r.get("fine_base_channels", c.fine_base_channels);
  r.get("residual_blocks_per_branch", c.residual_blocks_per_branch);
  r.get("shared_residual_blocks", c.shared_residual_blocks);
  r.get("attention_blocks", c.attention_blocks);
  r.get("dilation", c.dilation);
  r.get("use_mask_refine", c.use_mask_refine);
  r.get("use_attention", c.use_attention);
  r.get("use_fine_branch", c.use_fine_branch);
  r.finish();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("generator_config: ") + e.what());
  }
  return c;
}

DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j) {
  DiscriminatorConfig c;
  io::FieldReader r(j, "discriminator_config");
  r.get("channel_widths", c.channel_widths);
  r.get("kernel", c.kernel);
  r.get("leaky_slope", c.leaky_slope);
  r.get("spectral_norm", c.spectral_norm);
  r.finish();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("discriminator_config: ") + e.what());
  }
  return c;
}

int residual_stack_receptive_field(int blocks, int dilation) {
  // Each block adds (k - 1) * d for the dilated conv and (k - 1) for the plain one.
  return 1 + blocks * (2 * dilation + 2);
}

int discriminator_output_size(int input, const DiscriminatorConfig& config) {
  constexpr int strides[5] = {2, 2, 2, 1, 1};
  int side = input;
  for (int s : strides) {
    if (side + 2 < config.kernel) return 0;
    side = (side + 2 - config.kernel) / s + 1;
  }
  return side;
}

}  // namespace mtr::nn
