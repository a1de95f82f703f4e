#include "mtr/core/image.hpp"

#include <algorithm>
#include <sstream>

namespace mtr {

namespace {

void check_extent(int height, int width, int channels) {
  if (height < 1 || width < 1 || channels < 1) {
    std::ostringstream os;
    os << "invalid tensor extent " << height << "x" << width << "x" << channels;
    throw InvalidArgument(os.str());
  }
}

}  // namespace

ImageTensor::ImageTensor(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  check_extent(height, width, channels);
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

ImageTensor::ImageTensor(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  check_extent(height, width, channels);
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw InvalidArgument("image data size does not match " + shape_string());
  }
}

std::string ImageTensor::shape_string() const {
  std::ostringstream os;
  os << height_ << "x" << width_ << "x" << channels_;
  return os.str();
}

MaskTensor::MaskTensor(int height, int width, float fill) : height_(height), width_(width) {
  check_extent(height, width, 1);
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

MaskTensor::MaskTensor(int height, int width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
  check_extent(height, width, 1);
  if (data_.size() != static_cast<std::size_t>(height) * width) {
    throw InvalidArgument("mask data size does not match extent");
  }
}

bool MaskTensor::is_binary() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return v == 0.0f || v == 1.0f; });
}

std::size_t MaskTensor::count_ones() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1.0f));
}

bool MaskTensor::all_zero() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return v == 0.0f; });
}

bool MaskTensor::all_one() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return v == 1.0f; });
}

MaskTensor MaskTensor::complement() const {
  MaskTensor out = *this;
  for (auto& v : out.data_) v = 1.0f - v;
  return out;
}

MaskTensor MaskTensor::binarize(float threshold) const {
  MaskTensor out = *this;
  for (auto& v : out.data_) v = v > threshold ? 1.0f : 0.0f;
  return out;
}

MaskTensor MaskTensor::intersect(const MaskTensor& other) const {
  if (!same_extent(other)) throw InvalidArgument("mask intersect: extent mismatch");
  MaskTensor out = *this;
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = std::min(data_[i], other.data_[i]);
  return out;
}

MaskTensor MaskTensor::unite(const MaskTensor& other) const {
  if (!same_extent(other)) throw InvalidArgument("mask unite: extent mismatch");
  MaskTensor out = *this;
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = std::max(data_[i], other.data_[i]);
  return out;
}

bool MaskTensor::subset_of(const MaskTensor& other) const {
  if (!same_extent(other)) return false;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] == 1.0f && other.data_[i] != 1.0f) return false;
  }
  return true;
}

PolygonBox rectangle_box(double x0, double y0, double x1, double y1) {
  return PolygonBox{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, true};
}

void validate_sample(const AnnotatedSample& sample) {
  if (!sample.input.same_extent(sample.target) || !sample.gt_text_mask.same_extent(sample.input)) {
    throw InvalidArgument("sample tensors disagree in extent: input " +
                          sample.input.shape_string() + ", target " +
                          sample.target.shape_string());
  }
  if (sample.input.channels() != sample.target.channels()) {
    throw InvalidArgument("sample input/target channel mismatch");
  }
}

}  // namespace mtr
