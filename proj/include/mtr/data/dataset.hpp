#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtr/core/image.hpp"

namespace mtr::data {

/// Reader for `root/{input,target,boxes[,mask]}/NAME.{png,png,json,png}`.
/// Samples are indexed in sorted basename order and loaded on demand.
class DatasetReader {
 public:
  explicit DatasetReader(std::filesystem::path root, int refine_threshold = 25);

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  bool has_masks() const noexcept { return has_masks_; }
  const std::filesystem::path& root() const noexcept { return root_; }

  /// Loads sample i; without a mask/ folder the text mask is derived from the
  /// input/target difference.
  AnnotatedSample load(std::size_t i) const;

 private:
  std::filesystem::path root_;
  std::vector<std::string> names_;
  bool has_masks_ = false;
  int refine_threshold_;
};

std::vector<AnnotatedSample> load_dataset(const std::filesystem::path& root);

/// Writes samples as NAME = zero-padded index, plus `manifest.json`.
void write_dataset(const std::filesystem::path& root, const std::vector<AnnotatedSample>& samples,
                   const nlohmann::json& manifest, bool write_masks = true);

std::string sample_name(std::size_t index);

}  // namespace mtr::data
