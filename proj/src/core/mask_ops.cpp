#include "mtr/core/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtr {

namespace {

constexpr double kEdgeEps = 1e-9;

std::vector<Point> clamp_vertices(const PolygonBox& box, int height, int width) {
  std::vector<Point> out;
  out.reserve(box.vertices.size());
  for (const auto& p : box.vertices) {
    out.push_back({std::clamp(p.x, 0.0, static_cast<double>(width)),
                   std::clamp(p.y, 0.0, static_cast<double>(height))});
  }
  return out;
}

double shoelace_area(const std::vector<Point>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % poly.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(twice);
}

void fill_span(MaskTensor& mask, int y, double x0, double x1) {
  const int lo = std::max(0, static_cast<int>(std::ceil(x0 - kEdgeEps)));
  const int hi = std::min(mask.width() - 1, static_cast<int>(std::floor(x1 + kEdgeEps)));
  for (int x = lo; x <= hi; ++x) mask.at(y, x) = 1.0f;
}

// Even-odd scanline fill at integer row centers, plus every boundary pixel.
void scan_polygon(MaskTensor& mask, const std::vector<Point>& poly) {
  double min_y = poly.front().y;
  double max_y = poly.front().y;
  for (const auto& p : poly) {
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const int row_lo = std::max(0, static_cast<int>(std::ceil(min_y - kEdgeEps)));
  const int row_hi = std::min(mask.height() - 1, static_cast<int>(std::floor(max_y + kEdgeEps)));

  std::vector<double> crossings;
  for (int y = row_lo; y <= row_hi; ++y) {
    const double yc = y;
    crossings.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Point& a = poly[i];
      const Point& b = poly[(i + 1) % poly.size()];
      if (a.y == b.y) {
        if (std::abs(a.y - yc) <= kEdgeEps) fill_span(mask, y, std::min(a.x, b.x), std::max(a.x, b.x));
        continue;
      }
      const double lo = std::min(a.y, b.y);
      const double hi = std::max(a.y, b.y);
      if (yc < lo - kEdgeEps || yc > hi + kEdgeEps) continue;
      const double x = a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y);
      // Boundary point on this edge.
      const double rx = std::round(x);
      if (std::abs(x - rx) <= kEdgeEps) fill_span(mask, y, rx, rx);
      if (yc >= lo && yc < hi) crossings.push_back(x);
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t i = 0; i + 1 < crossings.size(); i += 2) {
      fill_span(mask, y, crossings[i], crossings[i + 1]);
    }
  }
}

// Row-wise prefix counts of ones; prefix[y][x] counts ones in [0, x).
std::vector<std::vector<int>> row_prefix(const MaskTensor& mask) {
  std::vector<std::vector<int>> prefix(mask.height(), std::vector<int>(mask.width() + 1, 0));
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      prefix[y][x + 1] = prefix[y][x] + (mask.at(y, x) > 0.5f ? 1 : 0);
    }
  }
  return prefix;
}

bool any_in_row(const std::vector<int>& prefix, int x0, int x1) {
  x0 = std::max(x0, 0);
  x1 = std::min(x1, static_cast<int>(prefix.size()) - 2);
  return x0 <= x1 && prefix[x1 + 1] - prefix[x0] > 0;
}

}  // namespace

MaskTensor rasterize_boxes(std::span<const PolygonBox> boxes, int height, int width) {
  MaskTensor mask(height, width, 0.0f);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const PolygonBox& box = boxes[i];
    if (box.vertices.size() < 3) {
      throw InvalidArgument("box " + std::to_string(i) + " has fewer than 3 vertices");
    }
    const auto poly = clamp_vertices(box, height, width);
    if (shoelace_area(poly) <= 0.0) {
      throw InvalidArgument("box " + std::to_string(i) + " is degenerate (zero area after clipping)");
    }
    if (!box.kept) continue;
    scan_polygon(mask, poly);
  }
  return mask;
}

MaskTensor pad_mask(const MaskTensor& mask, int n) {
  if (n < 0) throw InvalidArgument("pad_mask: negative padding " + std::to_string(n));
  if (n == 0) return mask;
  const int h = mask.height();
  const int w = mask.width();
  // A pad reaching the longest side means "no localization": all ones,
  // even for an empty mask.
  if (n >= std::max(h, w)) return MaskTensor::ones(h, w);
  // Separable square dilation: rows, then columns.
  MaskTensor rows(h, w, 0.0f);
  const auto prefix = row_prefix(mask);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) rows.at(y, x) = any_in_row(prefix[y], x - n, x + n) ? 1.0f : 0.0f;
  }
  MaskTensor out(h, w, 0.0f);
  std::vector<int> col(h + 1);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) col[y + 1] = col[y] + (rows.at(y, x) > 0.5f ? 1 : 0);
    for (int y = 0; y < h; ++y) {
      const int y0 = std::max(0, y - n);
      const int y1 = std::min(h - 1, y + n);
      out.at(y, x) = col[y1 + 1] - col[y0] > 0 ? 1.0f : 0.0f;
    }
  }
  return out;
}

MaskTensor dilate_disk(const MaskTensor& mask, int radius) {
  if (radius < 0) throw InvalidArgument("dilate_disk: negative radius " + std::to_string(radius));
  if (radius == 0) return mask;
  std::vector<int> half_width(2 * radius + 1);
  for (int dy = -radius; dy <= radius; ++dy) {
    int hw = 0;
    while ((hw + 1) * (hw + 1) + dy * dy <= radius * radius) ++hw;
    half_width[dy + radius] = hw;
  }
  const auto prefix = row_prefix(mask);
  MaskTensor out(mask.height(), mask.width(), 0.0f);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= mask.height()) continue;
        const int hw = half_width[dy + radius];
        if (any_in_row(prefix[yy], x - hw, x + hw)) {
          out.at(y, x) = 1.0f;
          break;
        }
      }
    }
  }
  return out;
}

ImageTensor composite(const ImageTensor& predicted, const ImageTensor& original,
                      const MaskTensor& mask) {
  if (!predicted.same_extent(original) || predicted.channels() != original.channels() ||
      !mask.same_extent(original)) {
    throw InvalidArgument("composite: extent mismatch (predicted " + predicted.shape_string() +
                          ", original " + original.shape_string() + ")");
  }
  ImageTensor out(original.height(), original.width(), original.channels());
  for (int y = 0; y < original.height(); ++y) {
    for (int x = 0; x < original.width(); ++x) {
      const float m = mask.at(y, x);
      for (int c = 0; c < original.channels(); ++c) {
        out.at(y, x, c) = m * predicted.at(y, x, c) + (1.0f - m) * original.at(y, x, c);
      }
    }
  }
  return out;
}

std::vector<PolygonBox> filter_boxes(std::span<const PolygonBox> boxes, double drop_rate,
                                     std::mt19937_64& rng) {
  if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) {
    throw InvalidArgument("filter_boxes: drop_rate outside [0,1]");
  }
  std::bernoulli_distribution drop(drop_rate);
  std::vector<PolygonBox> out(boxes.begin(), boxes.end());
  for (auto& box : out) {
    if (drop(rng)) box.kept = false;
  }
  return out;
}

int scaled_dilation_radius(int height, int width, int radius_at_256) {
  return static_cast<int>(std::lround(radius_at_256 * std::min(height, width) / 256.0));
}

}  // namespace mtr
