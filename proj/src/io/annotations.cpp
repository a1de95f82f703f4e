#include "mtr/io/annotations.hpp"

#include <sodium.h>

#include <fstream>

#include "mtr/io/png.hpp"

namespace mtr::io {

namespace {

PolygonBox polygon_from_points(const nlohmann::json& points, std::size_t index) {
  if (!points.is_array() || points.size() < 3) {
    throw SchemaError("polygon " + std::to_string(index) + ": expected at least 3 points");
  }
  PolygonBox box;
  for (const auto& p : points) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw SchemaError("polygon " + std::to_string(index) + ": points must be [x, y] numbers");
    }
    box.vertices.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return box;
}

}  // namespace

std::vector<PolygonBox> boxes_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("boxes") || !doc["boxes"].is_array()) {
    throw SchemaError("annotation document must be an object with a \"boxes\" array");
  }
  std::vector<PolygonBox> out;
  std::size_t i = 0;
  for (const auto& entry : doc["boxes"]) {
    if (!entry.is_object() || !entry.contains("points")) {
      throw SchemaError("box " + std::to_string(i) + ": missing \"points\"");
    }
    out.push_back(polygon_from_points(entry["points"], i));
    ++i;
  }
  return out;
}

std::vector<PolygonBox> polygons_from_json(const nlohmann::json& list) {
  if (!list.is_array()) throw SchemaError("polygons must be an array of point lists");
  std::vector<PolygonBox> out;
  for (std::size_t i = 0; i < list.size(); ++i) out.push_back(polygon_from_points(list[i], i));
  return out;
}

nlohmann::json boxes_to_json(const std::vector<PolygonBox>& boxes) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& box : boxes) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : box.vertices) points.push_back({p.x, p.y});
    list.push_back({{"points", points}});
  }
  return {{"boxes", list}};
}

std::vector<PolygonBox> read_boxes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  try {
    return boxes_from_json(doc);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_boxes(const std::filesystem::path& path, const std::vector<PolygonBox>& boxes) {
  const std::string text = boxes_to_json(boxes).dump();
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  const auto variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_ENCODED_LEN(bytes.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
  out.resize(out.size() - 1);  // trailing NUL
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \r\n", &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw InvalidArgument("malformed base64 payload");
  }
  out.resize(len);
  return out;
}

}  // namespace mtr::io
