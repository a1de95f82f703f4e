#include "mtr/io/archive.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>

#include "mtr/core/error.hpp"
#include "mtr/io/png.hpp"

namespace mtr::io {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kContainerVersion = 1;

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes, std::size_t limit)
      : bytes_(bytes), limit_(limit) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::vector<std::uint8_t> take(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > limit_ || pos_ > limit_ - n) throw SchemaError("checkpoint archive is truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::f32:
      return 4;
    case DType::f64:
    case DType::i64:
      return 8;
  }
  throw SchemaError("unknown tensor dtype");
}

std::int64_t TensorRecord::numel() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const TensorRecord* Archive::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::vector<std::uint8_t> serialize_archive(const Archive& archive) {
  std::vector<std::uint8_t> out(kMagic, kMagic + sizeof kMagic);
  put<std::uint32_t>(out, kContainerVersion);
  const std::string manifest = archive.manifest.dump();
  put<std::uint64_t>(out, manifest.size());
  out.insert(out.end(), manifest.begin(), manifest.end());
  put<std::uint64_t>(out, archive.tensors.size());
  for (const auto& t : archive.tensors) {
    if (t.bytes.size() != static_cast<std::size_t>(t.numel()) * dtype_size(t.dtype)) {
      throw InvalidArgument("tensor '" + t.name + "' byte size does not match its shape");
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put<std::int64_t>(out, d);
    put<std::uint64_t>(out, t.bytes.size());
    out.insert(out.end(), t.bytes.begin(), t.bytes.end());
  }
  put<std::uint32_t>(out, crc_of(out.data(), out.size()));
  return out;
}

Archive parse_archive(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw SchemaError("not a checkpoint archive (bad magic)");
  }
  if (bytes.size() < sizeof kMagic + 8) throw SchemaError("checkpoint archive is truncated");
  const std::size_t body = bytes.size() - 4;
  Reader r(bytes, body);
  r.take(sizeof kMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kContainerVersion) {
    throw SchemaError("unsupported container version " + std::to_string(version));
  }
  Archive archive;
  const auto manifest_len = r.get<std::uint64_t>();
  const auto manifest = r.take(manifest_len);
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    TensorRecord t;
    const auto name_len = r.get<std::uint32_t>();
    const auto name = r.take(name_len);
    t.name.assign(name.begin(), name.end());
    const auto dtype = r.get<std::uint8_t>();
    if (dtype < 1 || dtype > 3) throw SchemaError("tensor '" + t.name + "': unknown dtype");
    t.dtype = static_cast<DType>(dtype);
    const auto ndim = r.get<std::uint32_t>();
    if (ndim > 8) throw SchemaError("tensor '" + t.name + "': implausible rank");
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const auto extent = r.get<std::int64_t>();
      if (extent < 0) throw SchemaError("tensor '" + t.name + "': negative extent");
      t.shape.push_back(extent);
    }
    const auto nbytes = r.get<std::uint64_t>();
    if (nbytes != static_cast<std::uint64_t>(t.numel()) * dtype_size(t.dtype)) {
      throw SchemaError("tensor '" + t.name + "': byte size does not match shape");
    }
    t.bytes = r.take(nbytes);
    archive.tensors.push_back(std::move(t));
  }
  if (r.position() != body) throw SchemaError("checkpoint archive has trailing bytes");
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  if (stored != crc_of(bytes.data(), body)) throw SchemaError("checkpoint archive CRC mismatch");
  try {
    archive.manifest = nlohmann::json::parse(manifest.begin(), manifest.end());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  if (!archive.manifest.is_object()) throw SchemaError("checkpoint manifest must be an object");
  return archive;
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  const auto bytes = serialize_archive(archive);
  // Write-then-rename so readers never observe a partial file.
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, bytes);
  std::filesystem::rename(tmp, path);
}

Archive read_archive(const std::filesystem::path& path) { return parse_archive(read_file(path)); }

std::string crc32_hex(const std::vector<std::uint8_t>& bytes) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", crc_of(bytes.data(), bytes.size()));
  return buf;
}

}  // namespace mtr::io
