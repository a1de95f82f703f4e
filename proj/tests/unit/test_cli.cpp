#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "mtr/io/png.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mtrnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = mtr::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json first_line_json(const std::string& text) {
  return nlohmann::json::parse(text.substr(0, text.find('\n')));
}

std::string tree_digest(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  }
  std::sort(files.begin(), files.end());
  std::string digest;
  for (const auto& f : files) {
    const auto bytes = mtr::io::read_file(root / f);
    digest += f.string() + ":" + std::string(bytes.begin(), bytes.end()) + "\n";
  }
  return digest;
}

const char* kTinyConfig = R"({
  "image_size": 32, "batch_size": 2, "seed": 5,
  "generator": {"base_channels": 4, "fine_base_channels": 2},
  "discriminator": {"channel_widths": [4, 8, 8, 8, 1]},
  "features": {"widths": [4, 4, 8, 8, 8], "convs_per_stage": [1, 1, 1, 1, 1]}
})";

}  // namespace

TEST_CASE("usage errors exit 2 with one json error line") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"bogus"},
           {"synth-data"},
           {"synth-data", "--out", "x", "--n", "-3"},
           {"infer", "--image", "/nonexistent.png", "--checkpoint", "c", "--out", "o"},
           {"serve", "--port", "70000", "--checkpoint", "c"}}) {
    const auto r = run(args);
    INFO(r.err);
    CHECK(r.code == mtr::cli::kExitUsage);
    const auto j = first_line_json(r.err);
    CHECK(j["error"] == "usage_error");
    CHECK(j.contains("detail"));
  }
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"--version"}).out.find("mtrnet") != std::string::npos);
}

TEST_CASE("end-to-end: synth-data, make-masks, train, infer, eval") {
  test::TempDir dir("cli");
  const auto d1 = dir.path() / "d1";
  const auto d2 = dir.path() / "d2";
  REQUIRE(run({"synth-data", "--n", "4", "--size", "32", "--seed", "7", "--out", d1.string()}).code == 0);
  REQUIRE(run({"synth-data", "--n", "4", "--size", "32", "--seed", "7", "--out", d2.string()}).code == 0);
  CHECK(tree_digest(d1) == tree_digest(d2));
  CHECK(fs::exists(d1 / "manifest.json"));
  CHECK(fs::exists(d1 / "input" / "000000.png"));

  const auto d3 = dir.path() / "d3";
  REQUIRE(run({"synth-data", "--n", "4", "--size", "32", "--seed", "7", "--no-masks", "--out", d3.string()}).code == 0);
  CHECK_FALSE(fs::exists(d3 / "mask"));
  const auto mm = run({"make-masks", "--data", d3.string()});
  REQUIRE(mm.code == 0);
  CHECK(mtr::io::read_file(d3 / "mask" / "000001.png") == mtr::io::read_file(d1 / "mask" / "000001.png"));

  const auto config = dir.path() / "train.json";
  std::ofstream(config) << kTinyConfig;
  const auto ckpt = dir.path() / "model.ckpt";
  const auto metrics = dir.path() / "metrics.jsonl";
  const auto tr = run({"train", "--config", config.string(), "--data", d1.string(), "--out", ckpt.string(),
                       "--steps", "2", "--metrics", metrics.string()});
  INFO(tr.err);
  REQUIRE(tr.code == 0);
  REQUIRE(fs::exists(ckpt));
  std::ifstream lines(metrics);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.size() == 9);
    CHECK(j["step"] == ++count);
  }
  CHECK(count == 2);

  const auto resumed = run({"train", "--config", config.string(), "--data", d1.string(), "--out", ckpt.string(),
                            "--resume", ckpt.string(), "--steps", "3", "--metrics", metrics.string()});
  REQUIRE(resumed.code == 0);
  CHECK(resumed.out.find("step 3") != std::string::npos);

  const auto out_png = dir.path() / "out.png";
  const auto inter = dir.path() / "inter";
  const auto inf = run({"infer", "--image", (d1 / "input" / "000000.png").string(), "--all", "--checkpoint",
                        ckpt.string(), "--out", out_png.string(), "--intermediates", inter.string()});
  INFO(inf.err);
  REQUIRE(inf.code == 0);
  const auto out = mtr::io::read_png_rgb(out_png);
  CHECK(out.height() == 32);
  CHECK(fs::exists(inter / "refined_mask.png"));
  CHECK(fs::exists(inter / "attention_4.png"));

  const auto empty_poly = dir.path() / "none.json";
  std::ofstream(empty_poly) << R"({"boxes": []})";
  const auto same_png = dir.path() / "same.png";
  REQUIRE(run({"infer", "--image", (d1 / "input" / "000000.png").string(), "--polygons", empty_poly.string(),
               "--checkpoint", ckpt.string(), "--out", same_png.string()})
              .code == 0);
  CHECK(mtr::io::read_file(same_png) == mtr::io::read_file(d1 / "input" / "000000.png"));

  const auto report = dir.path() / "report.json";
  const auto ev = run({"eval", "--checkpoint", ckpt.string(), "--data", d1.string(), "--pads", "0,8,32", "--json",
                       report.string()});
  INFO(ev.err);
  REQUIRE(ev.code == 0);
  int rows = 0;
  for (char c : ev.out) rows += c == '\n';
  CHECK(rows == 5);
  std::ifstream rj(report);
  const auto doc = nlohmann::json::parse(rj);
  REQUIRE(doc["reports"].size() == 3);
  CHECK(doc["reports"][2]["pad"] == 32);

  SUBCASE("runtime failures exit 1 with one json line") {
    const auto bad = dir.path() / "bad.ckpt";
    std::ofstream(bad) << "not a checkpoint";
    const auto r = run({"infer", "--image", (d1 / "input" / "000000.png").string(), "--all", "--checkpoint",
                        bad.string(), "--out", out_png.string()});
    CHECK(r.code == mtr::cli::kExitFailure);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    CHECK(first_line_json(r.err)["error"] == "schema_error");

    const auto badpads = run({"eval", "--checkpoint", ckpt.string(), "--data", d1.string(), "--pads", "0,x"});
    CHECK(badpads.code == mtr::cli::kExitUsage);

    const auto wrong_size = run({"train", "--config", config.string(), "--data", d1.string(), "--out",
                                 ckpt.string(), "--image-size", "64", "--steps", "1"});
    CHECK(wrong_size.code == mtr::cli::kExitFailure);
    CHECK(first_line_json(wrong_size.err)["error"] == "invalid_argument");
  }
}
