#include "mtr/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace mtr::data {

namespace {

constexpr Glyph kGlyphs[] = {
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},};

using Rgb8 = std::array<int, 3>;

// 8-bit working canvas; converted to [0,1] floats at the end.
struct Canvas {
  int size;
  std::vector<Rgb8> pixels;
  explicit Canvas(int s) : size(s), pixels(static_cast<std::size_t>(s) * s) {}
  Rgb8& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * size + x]; }
};

Rgb8 random_color(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> channel(0, 255);
  return {channel(rng), channel(rng), channel(rng)};
}

void paint_background(Canvas& canvas, BackgroundKind kind, std::mt19937_64& rng) {
  const int s = canvas.size;
  switch (kind) {
    case BackgroundKind::flat: {
      const Rgb8 c = random_color(rng);
      std::fill(canvas.pixels.begin(), canvas.pixels.end(), c);
      break;
    }
    case BackgroundKind::gradient: {
      const Rgb8 a = random_color(rng);
      const Rgb8 b = random_color(rng);
      const double angle = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
      const double dx = std::cos(angle);
      const double dy = std::sin(angle);
      const double span = (std::abs(dx) + std::abs(dy)) * (s - 1);
      const double offset = std::min(0.0, dx * (s - 1)) + std::min(0.0, dy * (s - 1));
      for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
          const double t = span > 0 ? (dx * x + dy * y - offset) / span : 0.0;
          for (int c = 0; c < 3; ++c) {
            canvas.at(y, x)[c] = static_cast<int>(std::lround(a[c] + t * (b[c] - a[c])));
          }
        }
      }
      break;
    }
    case BackgroundKind::noise_texture: {
      // Bilinear value noise over a coarse lattice of random colors.
      const int cells = 4 + static_cast<int>(rng() % 5);
      std::vector<Rgb8> lattice(static_cast<std::size_t>(cells + 1) * (cells + 1));
      const Rgb8 base = random_color(rng);
      std::uniform_int_distribution<int> jitter(-60, 60);
      for (auto& c : lattice) {
        for (int k = 0; k < 3; ++k) c[k] = std::clamp(base[k] + jitter(rng), 0, 255);
      }
      const double cell = static_cast<double>(s) / cells;
      for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
          const double gx = x / cell;
          const double gy = y / cell;
          const int ix = std::min(static_cast<int>(gx), cells - 1);
          const int iy = std::min(static_cast<int>(gy), cells - 1);
          const double fx = gx - ix;
          const double fy = gy - iy;
          const auto& c00 = lattice[iy * (cells + 1) + ix];
          const auto& c01 = lattice[iy * (cells + 1) + ix + 1];
          const auto& c10 = lattice[(iy + 1) * (cells + 1) + ix];
          const auto& c11 = lattice[(iy + 1) * (cells + 1) + ix + 1];
          for (int k = 0; k < 3; ++k) {
            const double top = c00[k] + fx * (c01[k] - c00[k]);
            const double bottom = c10[k] + fx * (c11[k] - c10[k]);
            canvas.at(y, x)[k] = static_cast<int>(std::lround(top + fy * (bottom - top)));
          }
        }
      }
      break;
    }
  }
}

struct StringLayout {
  std::vector<const Glyph*> glyphs;
  int glyph_height;
  int glyph_width;
  int spacing;
  double text_width() const {
    const int n = static_cast<int>(glyphs.size());
    return n * glyph_width + (n - 1) * spacing;
  }
  // Whether local point (u, v) inside [0,W)x[0,H) hits a glyph dot.
  bool hit(double u, double v) const {
    if (u < 0 || v < 0 || u >= text_width() || v >= glyph_height) return false;
    const int pitch = glyph_width + spacing;
    const int index = static_cast<int>(u / pitch);
    const double within = u - index * pitch;
    if (index >= static_cast<int>(glyphs.size()) || within >= glyph_width) return false;
    const int col = std::min(4, static_cast<int>(within * 5.0 / glyph_width));
    const int row = std::min(6, static_cast<int>(v * 7.0 / glyph_height));
    return (glyphs[index]->rows[row] >> (4 - col)) & 1;
  }
};

struct Placement {
  std::array<Point, 4> corners;
  double min_x, min_y, max_x, max_y;
};

Placement place(const StringLayout& layout, double cx, double cy, double theta, double margin) {
  const double hw = layout.text_width() / 2.0 + margin;
  const double hh = layout.glyph_height / 2.0 + margin;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const std::array<std::pair<double, double>, 4> local = {
      std::pair{-hw, -hh}, std::pair{hw, -hh}, std::pair{hw, hh}, std::pair{-hw, hh}};
  Placement p{};
  p.min_x = p.min_y = 1e300;
  p.max_x = p.max_y = -1e300;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto [u, v] = local[i];
    const Point q{cx + c * u - s * v, cy + s * u + c * v};
    p.corners[i] = q;
    p.min_x = std::min(p.min_x, q.x);
    p.max_x = std::max(p.max_x, q.x);
    p.min_y = std::min(p.min_y, q.y);
    p.max_y = std::max(p.max_y, q.y);
  }
  return p;
}

bool overlaps(const Placement& a, const Placement& b) {
  constexpr double gap = 1.0;
  return !(a.max_x + gap < b.min_x || b.max_x + gap < a.min_x || a.max_y + gap < b.min_y ||
           b.max_y + gap < a.min_y);
}

}  // namespace

std::span<const Glyph> glyph_set() { return kGlyphs; }

std::string to_string(BackgroundKind kind) {
  switch (kind) {
    case BackgroundKind::flat:
      return "flat";
    case BackgroundKind::gradient:
      return "gradient";
    case BackgroundKind::noise_texture:
      return "noise-texture";
  }
  return "flat";
}

BackgroundKind background_from_string(const std::string& name) {
  if (name == "flat") return BackgroundKind::flat;
  if (name == "gradient") return BackgroundKind::gradient;
  if (name == "noise-texture") return BackgroundKind::noise_texture;
  throw InvalidArgument("unknown background kind '" + name + "'");
}

SynthConfig SynthConfig::for_size(int size, std::uint64_t seed) {
  SynthConfig c;
  c.image_size = size;
  c.glyph_scale_min = std::max(4, size * 3 / 32);
  c.glyph_scale_max = std::max(c.glyph_scale_min, size * 3 / 16);
  c.seed = seed;
  return c;
}

void SynthConfig::validate() const {
  if (image_size < 8) throw InvalidArgument("synth: image_size must be >= 8");
  if (glyph_scale_min < 4 || glyph_scale_max < glyph_scale_min) {
    throw InvalidArgument("synth: glyph scale range must satisfy 4 <= min <= max");
  }
  if (strings_min < 1 || strings_max < strings_min) {
    throw InvalidArgument("synth: strings per image must satisfy 1 <= min <= max");
  }
  if (max_rotation_deg < 0 || max_rotation_deg > 45) {
    throw InvalidArgument("synth: max_rotation_deg must lie in [0, 45]");
  }
}

nlohmann::json to_json(const SynthConfig& c) {
  nlohmann::json doc = {{"image_size", c.image_size},
                        {"glyph_scale_range", {c.glyph_scale_min, c.glyph_scale_max}},
                        {"strings_per_image", {c.strings_min, c.strings_max}},
                        {"max_rotation_deg", c.max_rotation_deg},
                        {"seed", c.seed}};
  doc["background_kind"] = c.background_kind ? nlohmann::json(to_string(*c.background_kind))
                                             : nlohmann::json("random");
  return doc;
}

SynthConfig synth_config_from_json(const nlohmann::json& doc) {
  SynthConfig c = SynthConfig::for_size(doc.value("image_size", 256));
  try {
    if (doc.contains("glyph_scale_range")) {
      c.glyph_scale_min = doc["glyph_scale_range"].at(0).get<int>();
      c.glyph_scale_max = doc["glyph_scale_range"].at(1).get<int>();
    }
    if (doc.contains("strings_per_image")) {
      c.strings_min = doc["strings_per_image"].at(0).get<int>();
      c.strings_max = doc["strings_per_image"].at(1).get<int>();
    }
    c.max_rotation_deg = doc.value("max_rotation_deg", c.max_rotation_deg);
    c.seed = doc.value("seed", std::uint64_t{0});
    const std::string kind = doc.value("background_kind", std::string("random"));
    if (kind != "random") c.background_kind = background_from_string(kind);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

AnnotatedSample generate_sample(const SynthConfig& config, std::uint64_t index) {
  config.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  const int s = config.image_size;

  const BackgroundKind kind =
      config.background_kind.value_or(static_cast<BackgroundKind>(rng() % 3));
  Canvas background(s);
  paint_background(background, kind, rng);
  Canvas text = background;
  MaskTensor gt(s, s, 0.0f);
  std::vector<PolygonBox> boxes;
  std::vector<Placement> placed;

  std::uniform_int_distribution<int> n_strings(config.strings_min, config.strings_max);
  std::uniform_int_distribution<int> scale(config.glyph_scale_min, config.glyph_scale_max);
  std::uniform_int_distribution<int> length(2, 6);
  std::uniform_int_distribution<std::size_t> symbol(0, std::size(kGlyphs) - 1);
  const double max_theta = config.max_rotation_deg * std::numbers::pi / 180.0;
  std::uniform_real_distribution<double> rotation(-max_theta, max_theta);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double kMargin = 1.0;
  constexpr int kAttempts = 60;

  const int wanted = n_strings(rng);
  for (int k = 0; k < wanted; ++k) {
    bool done = false;
    for (int attempt = 0; attempt < kAttempts && !done; ++attempt) {
      StringLayout layout;
      layout.glyph_height = scale(rng);
      layout.glyph_width = std::max(3, static_cast<int>(std::lround(layout.glyph_height * 5.0 / 7.0)));
      layout.spacing = std::max(1, static_cast<int>(std::lround(layout.glyph_height / 7.0)));
      const int len = length(rng);
      for (int i = 0; i < len; ++i) layout.glyphs.push_back(&kGlyphs[symbol(rng)]);
      while (layout.glyphs.size() > 1 && layout.text_width() + 2 * kMargin > s - 2) {
        layout.glyphs.pop_back();
      }
      const double theta = rotation(rng);
      const Placement centered = place(layout, 0.0, 0.0, theta, kMargin);
      const double lo_x = -centered.min_x;
      const double hi_x = (s - 1) - centered.max_x;
      const double lo_y = -centered.min_y;
      const double hi_y = (s - 1) - centered.max_y;
      if (hi_x < lo_x || hi_y < lo_y) continue;
      const double cx = lo_x + unit(rng) * (hi_x - lo_x);
      const double cy = lo_y + unit(rng) * (hi_y - lo_y);
      const Placement p = place(layout, cx, cy, theta, kMargin);
      if (std::any_of(placed.begin(), placed.end(), [&](const Placement& q) { return overlaps(p, q); })) {
        continue;
      }

      Rgb8 color = random_color(rng);
      const double c = std::cos(theta);
      const double sn = std::sin(theta);
      const double half_w = layout.text_width() / 2.0;
      const double half_h = layout.glyph_height / 2.0;
      std::vector<std::pair<int, int>> hits;
      const int x0 = std::max(0, static_cast<int>(std::floor(p.min_x)));
      const int x1 = std::min(s - 1, static_cast<int>(std::ceil(p.max_x)));
      const int y0 = std::max(0, static_cast<int>(std::floor(p.min_y)));
      const int y1 = std::min(s - 1, static_cast<int>(std::ceil(p.max_y)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dx = x - cx;
          const double dy = y - cy;
          const double u = c * dx + sn * dy + half_w;
          const double v = -sn * dx + c * dy + half_h;
          if (layout.hit(u, v)) hits.emplace_back(y, x);
        }
      }
      if (hits.empty()) continue;
      for (const auto& [y, x] : hits) {
        const Rgb8& bg = background.at(y, x);
        Rgb8 ink = color;
        int diff = 0;
        for (int ch = 0; ch < 3; ++ch) diff = std::max(diff, std::abs(ink[ch] - bg[ch]));
        if (diff < 64) {
          for (int ch = 0; ch < 3; ++ch) ink[ch] = bg[ch] < 128 ? bg[ch] + 128 : bg[ch] - 128;
        }
        text.at(y, x) = ink;
        gt.at(y, x) = 1.0f;
      }
      boxes.push_back(PolygonBox{{p.corners.begin(), p.corners.end()}, true});
      placed.push_back(p);
      done = true;
    }
    if (!done && boxes.empty()) {
      throw InvalidArgument("synth: configuration cannot fit a single string in a " +
                            std::to_string(s) + "px image");
    }
  }

  auto to_image = [s](const Canvas& canvas) {
    ImageTensor image(s, s, 3);
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        for (int ch = 0; ch < 3; ++ch) image.at(y, x, ch) = canvas.pixels[y * s + x][ch] / 255.0f;
      }
    }
    return image;
  };
  return AnnotatedSample{to_image(text), to_image(background), std::move(boxes), std::move(gt)};
}

}  // namespace mtr::data
