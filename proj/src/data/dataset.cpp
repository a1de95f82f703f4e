#include "mtr/data/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "mtr/data/augment.hpp"
#include "mtr/io/annotations.hpp"
#include "mtr/io/png.hpp"

namespace mtr::data {

namespace fs = std::filesystem;

DatasetReader::DatasetReader(fs::path root, int refine_threshold)
    : root_(std::move(root)), refine_threshold_(refine_threshold) {
  for (const char* sub : {"input", "target", "boxes"}) {
    if (!fs::is_directory(root_ / sub)) {
      throw IoError("dataset " + root_.string() + ": missing directory '" + sub + "'");
    }
  }
  has_masks_ = fs::is_directory(root_ / "mask");
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(root_ / "input")) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      names.insert(entry.path().stem().string());
    }
  }
  names_.assign(names.begin(), names.end());
  for (const auto& name : names_) {
    if (!fs::exists(root_ / "target" / (name + ".png"))) {
      throw IoError("dataset: missing target for '" + name + "'");
    }
    if (!fs::exists(root_ / "boxes" / (name + ".json"))) {
      throw IoError("dataset: missing boxes for '" + name + "'");
    }
    if (has_masks_ && !fs::exists(root_ / "mask" / (name + ".png"))) {
      throw IoError("dataset: missing mask for '" + name + "'");
    }
  }
}

AnnotatedSample DatasetReader::load(std::size_t i) const {
  const std::string& name = names_.at(i);
  AnnotatedSample s;
  s.input = io::read_png_rgb(root_ / "input" / (name + ".png"));
  s.target = io::read_png_rgb(root_ / "target" / (name + ".png"));
  s.boxes = io::read_boxes(root_ / "boxes" / (name + ".json"));
  if (!s.input.same_extent(s.target)) {
    throw IoError("dataset: input/target size mismatch for '" + name + "'");
  }
  if (has_masks_) {
    s.gt_text_mask = io::read_png_gray(root_ / "mask" / (name + ".png")).binarize(0.5f);
  } else {
    s.gt_text_mask = derive_refined_mask(s.input, s.target, s.boxes, refine_threshold_);
  }
  validate_sample(s);
  return s;
}

std::vector<AnnotatedSample> load_dataset(const fs::path& root) {
  DatasetReader reader(root);
  std::vector<AnnotatedSample> out;
  out.reserve(reader.size());
  for (std::size_t i = 0; i < reader.size(); ++i) out.push_back(reader.load(i));
  return out;
}

std::string sample_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

void write_dataset(const fs::path& root, const std::vector<AnnotatedSample>& samples,
                   const nlohmann::json& manifest, bool write_masks) {
  for (const char* sub : {"input", "target", "boxes"}) fs::create_directories(root / sub);
  if (write_masks) fs::create_directories(root / "mask");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string name = sample_name(i);
    io::write_png(root / "input" / (name + ".png"), samples[i].input);
    io::write_png(root / "target" / (name + ".png"), samples[i].target);
    io::write_boxes(root / "boxes" / (name + ".json"), samples[i].boxes);
    if (write_masks) io::write_png(root / "mask" / (name + ".png"), samples[i].gt_text_mask);
  }
  const std::string text = manifest.dump(2) + "\n";
  io::write_file(root / "manifest.json",
                 std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace mtr::data
