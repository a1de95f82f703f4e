#include "mtr/nn/convert.hpp"

#include <cstring>
#include <vector>

#include "mtr/core/error.hpp"

namespace mtr::nn {

torch::Tensor to_tensor(const ImageTensor& image) {
  const auto& v = image.vector();
  auto hwc = torch::from_blob(const_cast<float*>(v.data()),
                              {image.height(), image.width(), image.channels()}, torch::kFloat32);
  return hwc.permute({2, 0, 1}).unsqueeze(0).contiguous();
}

torch::Tensor to_tensor(const MaskTensor& mask) {
  auto d = mask.data();
  return torch::from_blob(const_cast<float*>(d.data()), {1, 1, mask.height(), mask.width()},
                          torch::kFloat32)
      .clone();
}

torch::Tensor stack_images(std::span<const ImageTensor> images) {
  std::vector<torch::Tensor> parts;
  parts.reserve(images.size());
  for (const auto& im : images) parts.push_back(to_tensor(im));
  return torch::cat(parts, 0);
}

torch::Tensor stack_masks(std::span<const MaskTensor> masks) {
  std::vector<torch::Tensor> parts;
  parts.reserve(masks.size());
  for (const auto& m : masks) parts.push_back(to_tensor(m));
  return torch::cat(parts, 0);
}

ImageTensor to_image(const torch::Tensor& t) {
  auto x = t.detach();
  if (x.dim() == 4) {
    if (x.size(0) != 1) throw InvalidArgument("to_image expects a single image");
    x = x.squeeze(0);
  }
  if (x.dim() != 3) throw InvalidArgument("to_image expects [C,H,W], got " + c10::str(t.sizes()));
  x = x.permute({1, 2, 0}).to(torch::kFloat32).contiguous();
  const auto* p = x.data_ptr<float>();
  return ImageTensor(static_cast<int>(x.size(0)), static_cast<int>(x.size(1)),
                     static_cast<int>(x.size(2)), std::vector<float>(p, p + x.numel()));
}

MaskTensor to_mask(const torch::Tensor& t) {
  auto x = t.detach();
  while (x.dim() > 2 && x.size(0) == 1) x = x.squeeze(0);
  if (x.dim() != 2) throw InvalidArgument("to_mask expects a single-channel map, got " + c10::str(t.sizes()));
  x = x.to(torch::kFloat32).contiguous();
  const auto* p = x.data_ptr<float>();
  return MaskTensor(static_cast<int>(x.size(0)), static_cast<int>(x.size(1)),
                    std::vector<float>(p, p + x.numel()));
}

io::DType archive_dtype(torch::ScalarType type) {
  switch (type) {
    case torch::kFloat32:
      return io::DType::f32;
    case torch::kFloat64:
      return io::DType::f64;
    case torch::kInt64:
      return io::DType::i64;
    default:
      throw InvalidArgument(std::string("unsupported tensor dtype ") + c10::toString(type));
  }
}

io::TensorRecord to_record(const std::string& name, const torch::Tensor& t) {
  io::TensorRecord r;
  r.name = name;
  r.dtype = archive_dtype(t.scalar_type());
  const auto c = t.detach().cpu().contiguous();
  r.shape.assign(c.sizes().begin(), c.sizes().end());
  r.bytes.resize(c.numel() * c.element_size());
  if (!r.bytes.empty()) std::memcpy(r.bytes.data(), c.data_ptr(), r.bytes.size());
  return r;
}

torch::Tensor from_record(const io::TensorRecord& record) {
  torch::Dtype dtype = torch::kFloat32;
  if (record.dtype == io::DType::f64) dtype = torch::kFloat64;
  if (record.dtype == io::DType::i64) dtype = torch::kInt64;
  auto t = torch::empty(record.shape, torch::TensorOptions().dtype(dtype));
  if (!record.bytes.empty()) std::memcpy(t.data_ptr(), record.bytes.data(), record.bytes.size());
  return t;
}

}  // namespace mtr::nn
