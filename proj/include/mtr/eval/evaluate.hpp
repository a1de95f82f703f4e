#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtr/core/model.hpp"
#include "mtr/eval/metrics.hpp"

namespace mtr::eval {

struct ImageScores {
  double psnr = 0.0;
  double ssim = 0.0;
  double mse_pct = 0.0;
  double mae_pct = 0.0;
};

struct ImageRecord {
  std::string name;
  ImageScores coarse_predicted;
  ImageScores coarse_composited;
  ImageScores fine_predicted;
  ImageScores fine_composited;
  MaskScores mask;
};

struct EvalReport {
  int pad = 0;
  std::vector<ImageRecord> images;
  /// Arithmetic mean over `images`.
  ImageRecord mean;
};

struct EvalOptions {
  float mask_threshold = 0.5f;
  /// Unset: 7 px at 256, scaled with the shorter side.
  std::optional<int> dilation_radius;
};

/// Random-access sample provider: count, loader, and display name.
struct SampleSource {
  std::size_t count = 0;
  std::function<AnnotatedSample(std::size_t)> load;
  std::function<std::string(std::size_t)> name;
};

SampleSource source_from(const std::vector<AnnotatedSample>& samples);

ImageScores score_image(const ImageTensor& output, const ImageTensor& target);

/// Runs the model on every sample with coarse mask pad_mask(box mask, pad) and
/// scores all four output variants against the target. Composited variants
/// use the binarized refined mask dilated by the disk radius.
EvalReport evaluate(const InpaintingModel& model, const SampleSource& data, int pad,
                    const EvalOptions& options = {});

nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const std::vector<EvalReport>& reports);
/// Aligned text table, one row per pad setting.
std::string format_table(const std::vector<EvalReport>& reports);

}  // namespace mtr::eval
