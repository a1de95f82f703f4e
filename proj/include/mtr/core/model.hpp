#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtr/core/image.hpp"

namespace mtr {

/// Generator outputs for one image, in the torch-free value types.
struct ModelOutputs {
  MaskTensor refined_mask;
  ImageTensor coarse;
  ImageTensor coarse_composite;
  ImageTensor fine;
  ImageTensor fine_composite;
  std::vector<MaskTensor> attention_maps;
};

/// Anything that maps (image, coarse mask) to generator outputs. Implementations
/// must be safe to call concurrently.
class InpaintingModel {
 public:
  virtual ~InpaintingModel() = default;
  virtual ModelOutputs run(const ImageTensor& input, const MaskTensor& coarse_mask) const = 0;
  /// Required divisor of the input height and width.
  virtual int spatial_multiple() const { return 1; }
  virtual std::string id() const { return "anonymous"; }
  virtual std::int64_t step() const { return 0; }
};

}  // namespace mtr
