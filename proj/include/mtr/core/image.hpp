#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mtr/core/error.hpp"

namespace mtr {

/// Dense H x W x C image, row-major with interleaved channels, values in [0,1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, int channels, float fill = 0.0f);
  ImageTensor(int height, int width, int channels, std::vector<float> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int y, int x, int c) noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int y, int x, int c) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& vector() const noexcept { return data_; }

  bool same_extent(const ImageTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  std::string shape_string() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Single-channel H x W map. Convention: 1 marks a region to remove, 0 keeps it.
class MaskTensor {
 public:
  MaskTensor() = default;
  MaskTensor(int height, int width, float fill = 0.0f);
  MaskTensor(int height, int width, std::vector<float> data);

  static MaskTensor ones(int height, int width) { return MaskTensor(height, width, 1.0f); }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  float& at(int y, int x) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  float at(int y, int x) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  /// True when every value is exactly 0 or 1.
  bool is_binary() const noexcept;
  /// Number of entries equal to 1 (for binary masks: the area).
  std::size_t count_ones() const noexcept;
  bool all_zero() const noexcept;
  bool all_one() const noexcept;

  /// 1 - M, elementwise.
  MaskTensor complement() const;
  /// 1 where value > threshold, else 0.
  MaskTensor binarize(float threshold) const;
  /// Elementwise minimum (intersection for binary masks).
  MaskTensor intersect(const MaskTensor& other) const;
  /// Elementwise maximum (union for binary masks).
  MaskTensor unite(const MaskTensor& other) const;
  /// True when every 1 of this mask is also 1 in `other`.
  bool subset_of(const MaskTensor& other) const;

  bool same_extent(const MaskTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool same_extent(const ImageTensor& image) const noexcept {
    return height_ == image.height() && width_ == image.width();
  }

  friend bool operator==(const MaskTensor&, const MaskTensor&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Closed polygon in pixel coordinates, origin top-left. Pixel (x, y) has its
/// center at the integer coordinate (x, y).
struct PolygonBox {
  std::vector<Point> vertices;
  bool kept = true;
  friend bool operator==(const PolygonBox&, const PolygonBox&) = default;
};

/// Axis-aligned rectangle with corners (x0, y0) and (x1, y1), inclusive.
PolygonBox rectangle_box(double x0, double y0, double x1, double y1);

struct AnnotatedSample {
  ImageTensor input;
  ImageTensor target;
  std::vector<PolygonBox> boxes;
  MaskTensor gt_text_mask;
};

/// Throws InvalidArgument unless the sample's tensors share one extent.
void validate_sample(const AnnotatedSample& sample);

}  // namespace mtr
