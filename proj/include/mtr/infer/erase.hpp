#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "mtr/core/model.hpp"

namespace mtr::infer {

/// Whole-image removal: the coarse mask is all ones.
struct EraseAll {};

using EraseRegion = std::variant<std::vector<PolygonBox>, MaskTensor, EraseAll>;

struct EraseOptions {
  int dilation_radius = 7;
  float mask_threshold = 0.5f;
  bool return_intermediates = false;
};

struct EraseRequest {
  ImageTensor image;
  EraseRegion region = EraseAll{};
  EraseOptions options;
};

struct Intermediates {
  MaskTensor refined_mask;
  ImageTensor coarse;
  ImageTensor coarse_composite;
  ImageTensor fine;
  std::vector<MaskTensor> attention_maps;
};

struct EraseResult {
  ImageTensor composite_fine;
  MaskTensor coarse_mask;
  /// dilate(bin(M_r) & coarse) & coarse: the pixels taken from the fine output.
  MaskTensor removal_mask;
  std::optional<Intermediates> intermediates;
};

/// Coarse mask for a region: rasterized polygons, the given mask binarized at
/// 0.5, or all ones.
MaskTensor coarse_mask_for(const EraseRegion& region, int height, int width);

/// Mirror padding on the bottom and right edges.
ImageTensor reflect_pad(const ImageTensor& image, int bottom, int right);
MaskTensor reflect_pad(const MaskTensor& mask, int bottom, int right);
ImageTensor crop(const ImageTensor& image, int height, int width);
MaskTensor crop(const MaskTensor& mask, int height, int width);

/// Runs the model on the request. Inputs whose sides are not multiples of
/// model.spatial_multiple() are reflect-padded and the outputs cropped back.
/// Pixels outside the coarse mask are copied from the input unchanged.
EraseResult erase(const InpaintingModel& model, const EraseRequest& request);

}  // namespace mtr::infer
