#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>
#include <torch/torch.h>

#include "mtr/io/archive.hpp"
#include "mtr/nn/generator.hpp"

namespace mtr::train {

inline constexpr int kCheckpointSchemaVersion = 1;

/// Adds every parameter and buffer of `module` as "<prefix>.<name>".
void append_module(io::Archive& archive, const std::string& prefix, const torch::nn::Module& module);

/// Throws SchemaError when a tensor of `module` is missing from the archive or
/// has another shape or dtype. Never modifies the module.
void check_module(const io::Archive& archive, const std::string& prefix,
                  const torch::nn::Module& module);
/// check_module, then copies the values in.
void restore_module(const io::Archive& archive, const std::string& prefix, torch::nn::Module& module);

/// Throws SchemaError unless manifest.schema_version matches.
void check_schema_version(const nlohmann::json& manifest);

struct LoadedGenerator {
  nn::Generator generator{nullptr};
  nlohmann::json manifest;
  std::int64_t step = 0;
  /// CRC-32 of the archive bytes.
  std::string checkpoint_id;
};

/// Reads only the generator from a training checkpoint, in eval mode.
LoadedGenerator load_generator(const std::filesystem::path& path);

}  // namespace mtr::train
