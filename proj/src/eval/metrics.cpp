#include "mtr/eval/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace mtr::eval {

namespace {

void require_same(const ImageTensor& a, const ImageTensor& b, const char* what) {
  if (!a.same_extent(b) || a.channels() != b.channels()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                          b.shape_string());
  }
}

double mean_squared_error(const ImageTensor& a, const ImageTensor& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

// 'valid' separable correlation of one plane with a 1-D kernel in both axes.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::vector<double>& kernel) {
  const int k = static_cast<int>(kernel.size());
  const int ow = w - k + 1;
  const int oh = h - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += kernel[i] * plane[y * w + x + i];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += kernel[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const ImageTensor& a, const ImageTensor& b) {
  require_same(a, b, "psnr");
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageTensor& a, const ImageTensor& b, const SsimOptions& o) {
  require_same(a, b, "ssim");
  if (a.height() < o.window || a.width() < o.window) {
    throw InvalidArgument("ssim: image " + a.shape_string() + " smaller than the " +
                          std::to_string(o.window) + "px window");
  }
  std::vector<double> kernel(o.window);
  double total = 0.0;
  const double center = (o.window - 1) / 2.0;
  for (int i = 0; i < o.window; ++i) {
    kernel[i] = std::exp(-(i - center) * (i - center) / (2.0 * o.sigma * o.sigma));
    total += kernel[i];
  }
  for (auto& v : kernel) v /= total;

  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  const int h = a.height();
  const int w = a.width();
  const std::size_t n = static_cast<std::size_t>(h) * w;
  double channel_sum = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (int r = 0; r < h; ++r) {
      for (int q = 0; q < w; ++q) {
        const std::size_t i = static_cast<std::size_t>(r) * w + q;
        x[i] = a.at(r, q, c);
        y[i] = b.at(r, q, c);
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
      }
    }
    const auto mx = filter_valid(x, h, w, kernel);
    const auto my = filter_valid(y, h, w, kernel);
    const auto mxx = filter_valid(xx, h, w, kernel);
    const auto myy = filter_valid(yy, h, w, kernel);
    const auto mxy = filter_valid(xy, h, w, kernel);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = mxx[i] - mx[i] * mx[i];
      const double vy = myy[i] - my[i] * my[i];
      const double cov = mxy[i] - mx[i] * my[i];
      sum += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    channel_sum += sum / static_cast<double>(mx.size());
  }
  return channel_sum / a.channels();
}

ErrorPct mse_mae_pct(const ImageTensor& a, const ImageTensor& b) {
  require_same(a, b, "mse_mae_pct");
  double sq = 0.0;
  double ab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    sq += d * d;
    ab += std::abs(d);
  }
  const double n = static_cast<double>(a.size());
  return {100.0 * sq / n, 100.0 * ab / n};
}

MaskScores mask_prf(const MaskTensor& pred, const MaskTensor& gt, float threshold) {
  if (!pred.same_extent(gt)) throw InvalidArgument("mask_prf: extent mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.data()[i] > threshold;
    const bool g = gt.data()[i] > 0.5f;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  MaskScores s;
  const bool gt_empty = tp + fn == 0;
  s.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : (gt_empty ? 1.0 : 0.0);
  s.recall = gt_empty ? 1.0 : static_cast<double>(tp) / (tp + fn);
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace mtr::eval
