#pragma once

#include <random>
#include <span>
#include <vector>

#include "mtr/core/image.hpp"

namespace mtr {

/// Union of the filled polygons whose `kept` flag is set. Vertices are clamped
/// to [0,W]x[0,H]; a pixel is inside when its center lies inside the polygon or
/// on its boundary. Throws InvalidArgument naming the box index when a polygon
/// has zero area after clamping.
MaskTensor rasterize_boxes(std::span<const PolygonBox> boxes, int height, int width);

/// Dilation with a (2n+1)x(2n+1) square element, clipped at the border. For
/// n >= max(H, W) the result is the all-ones mask.
MaskTensor pad_mask(const MaskTensor& mask, int n);

/// Dilation with the disk {(dx,dy) : dx^2 + dy^2 <= r^2}.
MaskTensor dilate_disk(const MaskTensor& mask, int radius);

/// mask * predicted + (1 - mask) * original, mask broadcast over channels.
ImageTensor composite(const ImageTensor& predicted, const ImageTensor& original,
                      const MaskTensor& mask);

/// Marks each box kept=false independently with probability `drop_rate`.
std::vector<PolygonBox> filter_boxes(std::span<const PolygonBox> boxes, double drop_rate,
                                     std::mt19937_64& rng);

/// Disk radius used for compositing at a given resolution: 7 at 256 px, scaled
/// linearly with the shorter side.
int scaled_dilation_radius(int height, int width, int radius_at_256 = 7);

}  // namespace mtr
