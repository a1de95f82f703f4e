#pragma once

#include <span>

#include <torch/torch.h>

#include "mtr/core/image.hpp"
#include "mtr/io/archive.hpp"

namespace mtr::nn {

/// HWC image -> [1,C,H,W] float tensor.
torch::Tensor to_tensor(const ImageTensor& image);
/// Mask -> [1,1,H,W] float tensor.
torch::Tensor to_tensor(const MaskTensor& mask);

/// Stacks same-sized images or masks along a new batch dimension.
torch::Tensor stack_images(std::span<const ImageTensor> images);
torch::Tensor stack_masks(std::span<const MaskTensor> masks);

/// Accepts [C,H,W] or [1,C,H,W]; values are copied as float32.
ImageTensor to_image(const torch::Tensor& t);
/// Accepts [H,W], [1,H,W] or [1,1,H,W].
MaskTensor to_mask(const torch::Tensor& t);

/// Archive dtype for a torch scalar type; throws InvalidArgument when unsupported.
io::DType archive_dtype(torch::ScalarType type);

/// Contiguous copy of a float32, float64 or int64 tensor as an archive record.
io::TensorRecord to_record(const std::string& name, const torch::Tensor& t);
torch::Tensor from_record(const io::TensorRecord& record);

}  // namespace mtr::nn
