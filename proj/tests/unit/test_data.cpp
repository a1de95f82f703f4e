#include <doctest.h>

#include <filesystem>
#include <random>

#include "mtr/core/mask_ops.hpp"
#include "mtr/data/augment.hpp"
#include "mtr/data/dataset.hpp"
#include "mtr/data/synth.hpp"
#include "mtr/io/annotations.hpp"
#include "mtr/io/png.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace mtr;
using namespace mtr::data;

TEST_CASE("generate_sample is deterministic in (seed, index)") {
  const auto cfg = SynthConfig::for_size(64, 7);
  const auto a = generate_sample(cfg, 3);
  const auto b = generate_sample(cfg, 3);
  CHECK(a.input == b.input);
  CHECK(a.target == b.target);
  CHECK(a.boxes == b.boxes);
  CHECK(a.gt_text_mask == b.gt_text_mask);
  const auto c = generate_sample(cfg, 4);
  CHECK_FALSE(c.input == a.input);
}

TEST_CASE("generated text mask is exactly the input/target difference") {
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto s = generate_sample(SynthConfig::for_size(64, 11), i);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        bool differs = false;
        for (int c = 0; c < 3; ++c) differs |= s.input.at(y, x, c) != s.target.at(y, x, c);
        REQUIRE(differs == (s.gt_text_mask.at(y, x) == 1.0f));
      }
    }
    CHECK(composite(s.target, s.input, s.gt_text_mask) == s.target);
    CHECK(composite(s.input, s.target, s.gt_text_mask.complement()) == s.target);
    CHECK(io::quantize8(s.input) == s.input);
  }
}

TEST_CASE("generated boxes lie inside the image and each covers text") {
  const auto cfg = SynthConfig::for_size(64, 5);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto s = generate_sample(cfg, i);
    REQUIRE_FALSE(s.boxes.empty());
    const auto all = rasterize_boxes(s.boxes, 64, 64);
    CHECK(s.gt_text_mask.subset_of(all));
    for (const auto& box : s.boxes) {
      for (const auto& p : box.vertices) {
        CHECK(p.x >= 0.0);
        CHECK(p.y >= 0.0);
        CHECK(p.x <= 64.0);
        CHECK(p.y <= 64.0);
      }
      const auto one = oracle::rasterize({box}, 64, 64);
      CHECK(s.gt_text_mask.intersect(one).count_ones() >= 1);
    }
  }
}

TEST_CASE("synth config validation") {
  SynthConfig cfg = SynthConfig::for_size(64);
  cfg.glyph_scale_min = 3;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  SynthConfig tiny;
  tiny.image_size = 8;
  tiny.glyph_scale_min = 40;
  tiny.glyph_scale_max = 40;
  CHECK_THROWS_AS(generate_sample(tiny, 0), InvalidArgument);
  const auto round = synth_config_from_json(to_json(SynthConfig::for_size(96, 3)));
  CHECK(round.image_size == 96);
  CHECK(round.seed == 3);
  CHECK(round.glyph_scale_min == SynthConfig::for_size(96).glyph_scale_min);
}

TEST_CASE("derive_refined_mask thresholds inside boxes only") {
  ImageTensor input(8, 8, 3, 0.5f);
  ImageTensor target = input;
  const std::vector boxes{rectangle_box(0, 0, 3, 3)};
  CHECK(derive_refined_mask(input, target, boxes).all_zero());

  input.at(1, 1, 2) = 0.5f + 30.0f / 255.0f;  // inside, 30 levels
  input.at(6, 6, 0) = 0.5f + 30.0f / 255.0f;  // outside every box
  input.at(2, 2, 1) = 0.5f + 25.0f / 255.0f;  // exactly at the threshold
  const auto m = derive_refined_mask(input, target, boxes, 25);
  CHECK(m.at(1, 1) == 1.0f);
  CHECK(m.at(6, 6) == 0.0f);
  CHECK(m.at(2, 2) == 0.0f);
  CHECK(m.count_ones() == 1);
  CHECK(m.subset_of(rasterize_boxes(boxes, 8, 8)));
  CHECK_THROWS_AS(derive_refined_mask(input, ImageTensor(8, 9, 3), boxes), InvalidArgument);
}

TEST_CASE("augment identity path and forced full pad") {
  const auto s = generate_sample(SynthConfig::for_size(64, 2), 0);
  std::mt19937_64 rng(1);
  AugmentOptions identity{0.0, 0.0, 1};
  const auto a = augment(s, rng, identity);
  const auto boxes = rasterize_boxes(s.boxes, 64, 64);
  CHECK(a.pad_n == 0);
  CHECK(a.coarse_mask == a.box_mask);
  CHECK(a.box_mask == boxes);
  CHECK(a.target == s.target);
  CHECK(a.gt_refined_mask == s.gt_text_mask);

  AugmentOptions full{0.0, 1.0, std::nullopt};
  const auto f = augment(s, rng, full);
  CHECK(f.full_pad);
  CHECK(f.coarse_mask.all_one());
  AugmentOptions full_and_dropped{1.0, 1.0, std::nullopt};
  const auto g = augment(s, rng, full_and_dropped);
  CHECK(g.box_mask.all_zero());
  CHECK(g.coarse_mask.all_one());
  CHECK(g.target == s.input);
}

TEST_CASE("augment keeps filtered text in the target") {
  const auto cfg = SynthConfig::for_size(64, 9);
  std::mt19937_64 rng(42);
  int checked = 0;
  for (std::uint64_t i = 0; i < 40; ++i) {
    const auto s = generate_sample(cfg, i);
    const auto a = augment(s, rng);
    CHECK(a.box_mask.subset_of(a.coarse_mask));
    CHECK(a.gt_refined_mask.subset_of(a.box_mask));
    const auto kept_region = rasterize_boxes(a.boxes, 64, 64);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        const bool text = s.gt_text_mask.at(y, x) == 1.0f;
        const bool kept = kept_region.at(y, x) == 1.0f;
        for (int c = 0; c < 3; ++c) {
          const float want = (text && !kept) ? s.input.at(y, x, c) : s.target.at(y, x, c);
          REQUIRE(a.target.at(y, x, c) == want);
        }
      }
    }
    checked += std::count_if(a.boxes.begin(), a.boxes.end(), [](const auto& b) { return !b.kept; });
  }
  CHECK(checked > 0);
}

TEST_CASE("augment statistics over 10,000 draws") {
  AnnotatedSample s;
  s.input = ImageTensor(32, 32, 3, 0.5f);
  s.target = s.input;
  s.gt_text_mask = MaskTensor(32, 32, 0.0f);
  for (int k = 0; k < 3; ++k) s.boxes.push_back(rectangle_box(2 + 9 * k, 4, 7 + 9 * k, 12));
  std::mt19937_64 rng(77);
  int full = 0, dropped = 0, total_boxes = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = augment(s, rng);
    full += a.full_pad;
    for (const auto& b : a.boxes) dropped += !b.kept;
    total_boxes += static_cast<int>(a.boxes.size());
    if (!a.full_pad) {
      REQUIRE(a.pad_n >= 0);
      REQUIRE(a.pad_n < 16);
    }
    REQUIRE(a.box_mask.subset_of(a.coarse_mask));
  }
  const double full_frac = full / 10000.0;
  const double drop_frac = static_cast<double>(dropped) / total_boxes;
  CHECK(full_frac >= 0.09);
  CHECK(full_frac <= 0.11);
  CHECK(drop_frac >= 0.19);
  CHECK(drop_frac <= 0.21);
}

TEST_CASE("augmented streams are reproducible from the seed") {
  const auto s = generate_sample(SynthConfig::for_size(64, 1), 0);
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 10; ++i) {
    const auto x = augment(s, a);
    const auto y = augment(s, b);
    REQUIRE(x.coarse_mask == y.coarse_mask);
    REQUIRE(x.boxes == y.boxes);
    REQUIRE(x.pad_n == y.pad_n);
  }
}

TEST_CASE("load_dataset: order, derivation, and errors") {
  test::TempDir dir("dataset");
  std::vector<AnnotatedSample> samples;
  for (std::uint64_t i = 0; i < 3; ++i) samples.push_back(generate_sample(SynthConfig::for_size(32, 4), i));
  write_dataset(dir.path(), samples, {{"kind", "test"}}, true);

  const auto loaded = load_dataset(dir.path());
  REQUIRE(loaded.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(loaded[i].input == samples[i].input);
    CHECK(loaded[i].gt_text_mask == samples[i].gt_text_mask);
    CHECK(loaded[i].boxes.size() == samples[i].boxes.size());
  }
  DatasetReader reader(dir.path());
  CHECK(reader.names() == std::vector<std::string>{"000000", "000001", "000002"});

  // Without mask/, the text mask comes from the 25-level difference rule.
  std::filesystem::remove_all(dir.path() / "mask");
  const auto derived = load_dataset(dir.path());
  for (std::size_t i = 0; i < 3; ++i) CHECK(derived[i].gt_text_mask == samples[i].gt_text_mask);

  std::filesystem::remove(dir.path() / "target" / "000001.png");
  try {
    DatasetReader broken(dir.path());
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("000001") != std::string::npos);
  }
}

TEST_CASE("load_dataset: identical pair and a known difference patch") {
  test::TempDir dir("dataset_patch");
  AnnotatedSample same;
  same.input = ImageTensor(16, 16, 3, 100.0f / 255.0f);
  same.target = same.input;
  same.boxes = {rectangle_box(2, 2, 10, 10)};
  same.gt_text_mask = MaskTensor(16, 16, 0.0f);
  AnnotatedSample patch = same;
  MaskTensor expected(16, 16, 0.0f);
  for (int y = 4; y <= 6; ++y)
    for (int x = 3; x <= 8; ++x) {
      patch.input.at(y, x, 1) = 140.0f / 255.0f;
      expected.at(y, x) = 1.0f;
    }
  // Outside the box: suppressed.
  patch.input.at(14, 14, 0) = 200.0f / 255.0f;
  write_dataset(dir.path(), {same, patch}, {}, false);
  const auto loaded = load_dataset(dir.path());
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].gt_text_mask.all_zero());
  CHECK(loaded[1].gt_text_mask == expected);
  CHECK(loaded[1].gt_text_mask ==
        derive_refined_mask(patch.input, patch.target, patch.boxes, 25));

  io::write_file(dir.path() / "input" / "000000.png", std::vector<std::uint8_t>{1, 2, 3});
  CHECK_THROWS_AS(load_dataset(dir.path()), IoError);
}

TEST_CASE("polygon JSON schema") {
  const auto doc = nlohmann::json::parse(R"({"boxes": [{"points": [[1,2],[5,2],[5,6]]}]})");
  const auto boxes = io::boxes_from_json(doc);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].vertices[2] == Point{5, 6});
  CHECK(io::boxes_from_json(io::boxes_to_json(boxes)) == boxes);
  CHECK_THROWS_AS(io::boxes_from_json(nlohmann::json::parse(R"({"boxes": [{"points": [[1,2]]}]})")),
                  SchemaError);
  CHECK_THROWS_AS(io::boxes_from_json(nlohmann::json::parse(R"([])")), SchemaError);
}

TEST_CASE("PNG and base64 round trips are lossless on the 8-bit grid") {
  std::mt19937_64 rng(8);
  const auto img = io::quantize8(oracle::random_image(13, 7, 3, rng));
  CHECK(io::decode_png_rgb(io::encode_png(img)) == img);
  const auto mask = oracle::random_mask(9, 11, 0.3, rng);
  CHECK(io::decode_png_gray(io::encode_png(mask)) == mask);
  const std::vector<std::uint8_t> bytes{0, 1, 2, 250, 255, 17};
  CHECK(io::base64_decode(io::base64_encode(bytes)) == bytes);
  CHECK_THROWS_AS(io::base64_decode("@@@"), InvalidArgument);
  CHECK_THROWS_AS(io::decode_png_rgb(bytes), IoError);
}
