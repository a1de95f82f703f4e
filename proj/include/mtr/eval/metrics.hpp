#pragma once

#include "mtr/core/image.hpp"

namespace mtr::eval {

/// 10 log10(1 / mse); +infinity for identical images.
double psnr(const ImageTensor& a, const ImageTensor& b);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean local SSIM over every valid window position, per channel, averaged
/// over channels. Requires both sides >= window.
double ssim(const ImageTensor& a, const ImageTensor& b, const SsimOptions& options = {});

struct ErrorPct {
  double mse_pct = 0.0;
  double mae_pct = 0.0;
};

ErrorPct mse_mae_pct(const ImageTensor& a, const ImageTensor& b);

struct MaskScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Scores `pred > threshold` against a binary ground truth. With no predicted
/// positives precision is 1 when the ground truth is empty and 0 otherwise;
/// recall is 1 for an empty ground truth.
MaskScores mask_prf(const MaskTensor& pred, const MaskTensor& gt, float threshold = 0.5f);

}  // namespace mtr::eval
