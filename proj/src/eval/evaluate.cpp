#include "mtr/eval/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mtr/core/mask_ops.hpp"
#include "mtr/data/augment.hpp"
#include "mtr/data/dataset.hpp"

namespace mtr::eval {

namespace {

nlohmann::json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

nlohmann::json to_json(const ImageScores& s) {
  return {{"psnr", number(s.psnr)},
          {"ssim", number(s.ssim)},
          {"mse_pct", number(s.mse_pct)},
          {"mae_pct", number(s.mae_pct)}};
}

nlohmann::json to_json(const ImageRecord& r) {
  return {{"name", r.name},
          {"coarse_predicted", to_json(r.coarse_predicted)},
          {"coarse_composited", to_json(r.coarse_composited)},
          {"fine_predicted", to_json(r.fine_predicted)},
          {"fine_composited", to_json(r.fine_composited)},
          {"mask", {{"precision", r.mask.precision}, {"recall", r.mask.recall}, {"f1", r.mask.f1}}}};
}

void accumulate(ImageScores& sum, const ImageScores& s) {
  sum.psnr += s.psnr;
  sum.ssim += s.ssim;
  sum.mse_pct += s.mse_pct;
  sum.mae_pct += s.mae_pct;
}

void divide(ImageScores& s, double n) {
  s.psnr /= n;
  s.ssim /= n;
  s.mse_pct /= n;
  s.mae_pct /= n;
}

std::string fmt(double v, int precision) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

SampleSource source_from(const std::vector<AnnotatedSample>& samples) {
  return {samples.size(), [&samples](std::size_t i) { return samples[i]; },
          [](std::size_t i) { return data::sample_name(i); }};
}

ImageScores score_image(const ImageTensor& output, const ImageTensor& target) {
  const auto err = mse_mae_pct(output, target);
  return {psnr(output, target), ssim(output, target), err.mse_pct, err.mae_pct};
}

EvalReport evaluate(const InpaintingModel& model, const SampleSource& data, int pad,
                    const EvalOptions& options) {
  if (data.count == 0) throw InvalidArgument("evaluate: empty dataset");
  EvalReport report;
  report.pad = pad;
  report.mean.name = "mean";
  for (std::size_t i = 0; i < data.count; ++i) {
    const AnnotatedSample sample = data.load(i);
    const auto view = data::prepare_eval(sample, pad);
    const ModelOutputs out = model.run(view.input, view.coarse_mask);
    const int radius = options.dilation_radius.value_or(
        scaled_dilation_radius(view.input.height(), view.input.width()));
    const MaskTensor region = dilate_disk(out.refined_mask.binarize(options.mask_threshold), radius);

    ImageRecord rec;
    rec.name = data.name ? data.name(i) : data::sample_name(i);
    rec.coarse_predicted = score_image(out.coarse, view.target);
    rec.coarse_composited = score_image(composite(out.coarse, view.input, region), view.target);
    rec.fine_predicted = score_image(out.fine, view.target);
    rec.fine_composited = score_image(composite(out.fine, view.input, region), view.target);
    rec.mask = mask_prf(out.refined_mask, view.gt_refined_mask, options.mask_threshold);

    accumulate(report.mean.coarse_predicted, rec.coarse_predicted);
    accumulate(report.mean.coarse_composited, rec.coarse_composited);
    accumulate(report.mean.fine_predicted, rec.fine_predicted);
    accumulate(report.mean.fine_composited, rec.fine_composited);
    report.mean.mask.precision += rec.mask.precision;
    report.mean.mask.recall += rec.mask.recall;
    report.mean.mask.f1 += rec.mask.f1;
    report.images.push_back(std::move(rec));
  }
  const double n = static_cast<double>(data.count);
  divide(report.mean.coarse_predicted, n);
  divide(report.mean.coarse_composited, n);
  divide(report.mean.fine_predicted, n);
  divide(report.mean.fine_composited, n);
  report.mean.mask.precision /= n;
  report.mean.mask.recall /= n;
  report.mean.mask.f1 /= n;
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& r : report.images) images.push_back(to_json(r));
  return {{"pad", report.pad}, {"mean", to_json(report.mean)}, {"images", images}};
}

nlohmann::json to_json(const std::vector<EvalReport>& reports) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : reports) rows.push_back(to_json(r));
  return {{"reports", rows}};
}

std::string format_table(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%6s | %9s %9s %6s | %8s %7s %7s | %8s %7s %7s\n", "Pad",
                "Precision", "Recall", "F1", "P.PSNR", "P.SSIM", "P.MAE", "C.PSNR", "C.SSIM",
                "C.MAE");
  os << line;
  os << std::string(std::string(line).size() - 1, '-') << "\n";
  for (const auto& r : reports) {
    const auto& m = r.mean;
    std::snprintf(line, sizeof line, "%6d | %9s %9s %6s | %8s %7s %7s | %8s %7s %7s\n", r.pad,
                  fmt(100 * m.mask.precision, 2).c_str(), fmt(100 * m.mask.recall, 2).c_str(),
                  fmt(m.mask.f1, 3).c_str(), fmt(m.fine_predicted.psnr, 2).c_str(),
                  fmt(100 * m.fine_predicted.ssim, 2).c_str(), fmt(m.fine_predicted.mae_pct, 2).c_str(),
                  fmt(m.fine_composited.psnr, 2).c_str(), fmt(100 * m.fine_composited.ssim, 2).c_str(),
                  fmt(m.fine_composited.mae_pct, 2).c_str());
    os << line;
  }
  return os.str();
}

}  // namespace mtr::eval
