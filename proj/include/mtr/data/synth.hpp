#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "mtr/core/image.hpp"

namespace mtr::data {

enum class BackgroundKind { flat, gradient, noise_texture };

std::string to_string(BackgroundKind kind);
BackgroundKind background_from_string(const std::string& name);

/// Procedural text-on-texture generator settings. Glyph scale is the rendered
/// glyph height in pixels.
struct SynthConfig {
  int image_size = 256;
  int glyph_scale_min = 24;
  int glyph_scale_max = 48;
  int strings_min = 1;
  int strings_max = 3;
  /// Unset: each sample draws its background kind uniformly.
  std::optional<BackgroundKind> background_kind;
  double max_rotation_deg = 15.0;
  std::uint64_t seed = 0;

  /// Defaults rescaled for a square image of `size` pixels.
  static SynthConfig for_size(int size, std::uint64_t seed = 0);
  void validate() const;
};

nlohmann::json to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const nlohmann::json& doc);

/// Renders a deterministic sample from (config.seed, index): background-only
/// target, target with rendered strings as input, one tight quadrilateral per
/// string, and the exact mask of rendered glyph pixels. All values lie on the
/// 8-bit grid so a PNG round trip is lossless.
AnnotatedSample generate_sample(const SynthConfig& config, std::uint64_t index);

/// 5x7 bitmap; row r, column c set when bit (4 - c) of rows[r] is set.
struct Glyph {
  char symbol;
  std::uint8_t rows[7];
};

/// The built-in glyph set (A-Z, 0-9).
std::span<const Glyph> glyph_set();

}  // namespace mtr::data
