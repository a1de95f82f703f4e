#include "mtr/data/augment.hpp"

#include <algorithm>
#include <cmath>

#include "mtr/core/mask_ops.hpp"

namespace mtr::data {

namespace {

AugmentedSample assemble(const AnnotatedSample& sample, std::vector<PolygonBox> boxes, int pad_n) {
  const int h = sample.input.height();
  const int w = sample.input.width();
  AugmentedSample out;
  out.input = sample.input;
  out.box_mask = rasterize_boxes(boxes, h, w);
  out.gt_refined_mask = sample.gt_text_mask.binarize(0.5f).intersect(out.box_mask);
  out.target = sample.target;
  // Text of filtered boxes stays in the target.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (sample.gt_text_mask.at(y, x) > 0.5f && out.gt_refined_mask.at(y, x) == 0.0f) {
        for (int c = 0; c < sample.input.channels(); ++c) {
          out.target.at(y, x, c) = sample.input.at(y, x, c);
        }
      }
    }
  }
  out.pad_n = pad_n;
  out.full_pad = pad_n >= std::max(h, w);
  out.coarse_mask = pad_mask(out.box_mask, pad_n);
  out.boxes = std::move(boxes);
  return out;
}

}  // namespace

AugmentedSample augment(const AnnotatedSample& sample, std::mt19937_64& rng,
                        const AugmentOptions& options) {
  validate_sample(sample);
  auto boxes = filter_boxes(sample.boxes, options.drop_rate, rng);
  const int longest = std::max(sample.input.height(), sample.input.width());
  int pad_n = 0;
  if (std::bernoulli_distribution(options.full_pad_prob)(rng)) {
    pad_n = longest;
  } else {
    const int bound = options.max_pad_exclusive.value_or(longest / 2);
    if (bound > 1) pad_n = std::uniform_int_distribution<int>(0, bound - 1)(rng);
  }
  return assemble(sample, std::move(boxes), pad_n);
}

AugmentedSample prepare_eval(const AnnotatedSample& sample, int pad_n) {
  validate_sample(sample);
  auto boxes = sample.boxes;
  for (auto& b : boxes) b.kept = true;
  return assemble(sample, std::move(boxes), pad_n);
}

MaskTensor derive_refined_mask(const ImageTensor& input, const ImageTensor& target,
                               std::span<const PolygonBox> boxes, int threshold) {
  if (!input.same_extent(target) || input.channels() != target.channels()) {
    throw InvalidArgument("derive_refined_mask: input " + input.shape_string() +
                          " does not match target " + target.shape_string());
  }
  if (threshold < 0 || threshold > 255) {
    throw InvalidArgument("derive_refined_mask: threshold outside [0,255]");
  }
  const MaskTensor region = rasterize_boxes(boxes, input.height(), input.width());
  MaskTensor out(input.height(), input.width(), 0.0f);
  // Sub-level slack so 8-bit inputs compare exactly.
  const double limit = threshold + 1e-3;
  for (int y = 0; y < input.height(); ++y) {
    for (int x = 0; x < input.width(); ++x) {
      if (region.at(y, x) == 0.0f) continue;
      double level = 0.0;
      for (int c = 0; c < input.channels(); ++c) {
        level = std::max(level, 255.0 * std::abs(static_cast<double>(input.at(y, x, c)) - target.at(y, x, c)));
      }
      if (level > limit) out.at(y, x) = 1.0f;
    }
  }
  return out;
}

}  // namespace mtr::data
