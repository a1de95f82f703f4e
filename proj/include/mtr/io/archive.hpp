#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace mtr::io {

enum class DType : std::uint8_t { f32 = 1, f64 = 2, i64 = 3 };

std::size_t dtype_size(DType dtype);

/// One named tensor as raw little-endian bytes.
struct TensorRecord {
  std::string name;
  DType dtype = DType::f32;
  std::vector<std::int64_t> shape;
  std::vector<std::uint8_t> bytes;

  std::int64_t numel() const;
  friend bool operator==(const TensorRecord&, const TensorRecord&) = default;
};

/// Flat binary container: magic, JSON manifest, named tensors, CRC-32 trailer.
///
///   "MTRCKPT\0" | u32 container version | u64 manifest bytes | manifest JSON
///   | u64 tensor count | per tensor: u32 name bytes, name, u8 dtype, u32 ndim,
///   i64 dims[ndim], u64 data bytes, data | u32 crc32 of all preceding bytes
struct Archive {
  nlohmann::json manifest;
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(const std::string& name) const;
};

std::vector<std::uint8_t> serialize_archive(const Archive& archive);
/// Throws SchemaError on bad magic, truncation, CRC mismatch or malformed manifest.
Archive parse_archive(const std::vector<std::uint8_t>& bytes);

void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);

/// Hex CRC-32 of a byte buffer, used as a stable content id.
std::string crc32_hex(const std::vector<std::uint8_t>& bytes);

}  // namespace mtr::io
