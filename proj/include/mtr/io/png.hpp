#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mtr/core/image.hpp"

namespace mtr::io {

using Bytes = std::vector<std::uint8_t>;

/// Decodes any PNG to 8-bit RGB, mapping v to v/255.
ImageTensor decode_png_rgb(std::span<const std::uint8_t> bytes);
/// Decodes any PNG to 8-bit grayscale, mapping v to v/255.
MaskTensor decode_png_gray(std::span<const std::uint8_t> bytes);

/// Encodes a 1- or 3-channel image; values are clamped and rounded to 8 bits.
Bytes encode_png(const ImageTensor& image);
/// Encodes a mask as 8-bit grayscale (1 -> 255).
Bytes encode_png(const MaskTensor& mask);

ImageTensor read_png_rgb(const std::filesystem::path& path);
MaskTensor read_png_gray(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageTensor& image);
void write_png(const std::filesystem::path& path, const MaskTensor& mask);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Rounds every value to the nearest multiple of 1/255 (what a PNG round trip keeps).
ImageTensor quantize8(const ImageTensor& image);

}  // namespace mtr::io
