#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtr/core/image.hpp"

namespace mtr::io {

/// Parses `{"boxes": [{"points": [[x,y],...]}, ...]}`.
std::vector<PolygonBox> boxes_from_json(const nlohmann::json& doc);
/// Parses a bare list of point lists `[[[x,y],...], ...]` (wire format polygons).
std::vector<PolygonBox> polygons_from_json(const nlohmann::json& list);
nlohmann::json boxes_to_json(const std::vector<PolygonBox>& boxes);

std::vector<PolygonBox> read_boxes(const std::filesystem::path& path);
void write_boxes(const std::filesystem::path& path, const std::vector<PolygonBox>& boxes);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws InvalidArgument on malformed input.
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace mtr::io
