#include "mtr/io/png.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace mtr::io {

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

struct PngImage {
  png_image image{};
  PngImage() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

std::vector<std::uint8_t> decode(std::span<const std::uint8_t> bytes, png_uint_32 format,
                                 int& height, int& width) {
  PngImage png;
  if (bytes.empty() ||
      !png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size())) {
    throw IoError(std::string("PNG decode failed: ") + png.image.message);
  }
  png.image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, buffer.data(), 0, nullptr)) {
    throw IoError(std::string("PNG decode failed: ") + png.image.message);
  }
  height = static_cast<int>(png.image.height);
  width = static_cast<int>(png.image.width);
  return buffer;
}

Bytes encode(const std::vector<std::uint8_t>& pixels, int height, int width, png_uint_32 format) {
  PngImage png;
  png.image.width = static_cast<png_uint_32>(width);
  png.image.height = static_cast<png_uint_32>(height);
  png.image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png.image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + png.image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&png.image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + png.image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

ImageTensor decode_png_rgb(std::span<const std::uint8_t> bytes) {
  int h = 0;
  int w = 0;
  const auto raw = decode(bytes, PNG_FORMAT_RGB, h, w);
  std::vector<float> data(raw.size());
  std::transform(raw.begin(), raw.end(), data.begin(), [](std::uint8_t v) { return v / 255.0f; });
  return ImageTensor(h, w, 3, std::move(data));
}

MaskTensor decode_png_gray(std::span<const std::uint8_t> bytes) {
  int h = 0;
  int w = 0;
  const auto raw = decode(bytes, PNG_FORMAT_GRAY, h, w);
  std::vector<float> data(raw.size());
  std::transform(raw.begin(), raw.end(), data.begin(), [](std::uint8_t v) { return v / 255.0f; });
  return MaskTensor(h, w, std::move(data));
}

Bytes encode_png(const ImageTensor& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw InvalidArgument("encode_png: only 1- or 3-channel images are supported");
  }
  std::vector<std::uint8_t> pixels(image.size());
  std::transform(image.data().begin(), image.data().end(), pixels.begin(), to_byte);
  return encode(pixels, image.height(), image.width(),
                image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY);
}

Bytes encode_png(const MaskTensor& mask) {
  std::vector<std::uint8_t> pixels(mask.size());
  std::transform(mask.data().begin(), mask.data().end(), pixels.begin(), to_byte);
  return encode(pixels, mask.height(), mask.width(), PNG_FORMAT_GRAY);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

ImageTensor read_png_rgb(const std::filesystem::path& path) {
  try {
    return decode_png_rgb(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

MaskTensor read_png_gray(const std::filesystem::path& path) {
  try {
    return decode_png_gray(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const ImageTensor& image) {
  write_file(path, encode_png(image));
}

void write_png(const std::filesystem::path& path, const MaskTensor& mask) {
  write_file(path, encode_png(mask));
}

ImageTensor quantize8(const ImageTensor& image) {
  ImageTensor out = image;
  for (auto& v : out.data()) v = to_byte(v) / 255.0f;
  return out;
}

}  // namespace mtr::io
