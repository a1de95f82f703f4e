#pragma once

#include <optional>
#include <random>

#include "mtr/core/image.hpp"

namespace mtr::data {

/// A training example after box filtering and mask padding.
struct AugmentedSample {
  ImageTensor input;
  /// M_{p=n}: the padded coarse mask fed to the generator.
  MaskTensor coarse_mask;
  /// M_{p=0}: rasterized kept boxes, no padding.
  MaskTensor box_mask;
  /// Text-free image, except that text inside filtered boxes is preserved.
  ImageTensor target;
  /// M_gt restricted to kept boxes.
  MaskTensor gt_refined_mask;
  std::vector<PolygonBox> boxes;
  int pad_n = 0;
  bool full_pad = false;
};

struct AugmentOptions {
  double drop_rate = 0.2;
  double full_pad_prob = 0.1;
  /// Exclusive upper bound for the random pad; unset means max(H, W) / 2.
  std::optional<int> max_pad_exclusive;
};

/// Filters boxes, rebuilds masks and target from the kept boxes, then pads the
/// box mask (padding always follows filtering).
AugmentedSample augment(const AnnotatedSample& sample, std::mt19937_64& rng,
                        const AugmentOptions& options = {});

/// The un-augmented view of a sample: every box kept, pad n applied to the box mask.
AugmentedSample prepare_eval(const AnnotatedSample& sample, int pad_n);

/// 1 where the channel-max absolute difference, in 8-bit units, exceeds
/// `threshold` and the pixel lies inside the rasterized box union.
MaskTensor derive_refined_mask(const ImageTensor& input, const ImageTensor& target,
                               std::span<const PolygonBox> boxes, int threshold = 25);

}  // namespace mtr::data
