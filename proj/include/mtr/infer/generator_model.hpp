#pragma once

#include <filesystem>
#include <memory>

#include "mtr/core/model.hpp"
#include "mtr/nn/generator.hpp"

namespace mtr::infer {

/// A frozen generator behind the torch-free model interface.
class GeneratorModel : public InpaintingModel {
 public:
  GeneratorModel(nn::Generator generator, std::string id, std::int64_t step);
  /// Loads the generator part of a training checkpoint.
  static std::shared_ptr<GeneratorModel> from_checkpoint(const std::filesystem::path& path);

  ModelOutputs run(const ImageTensor& input, const MaskTensor& coarse_mask) const override;
  int spatial_multiple() const override { return 4; }
  std::string id() const override { return id_; }
  std::int64_t step() const override { return step_; }

 private:
  mutable nn::Generator generator_;
  std::string id_;
  std::int64_t step_;
};

}  // namespace mtr::infer
