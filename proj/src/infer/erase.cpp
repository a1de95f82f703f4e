#include "mtr/infer/erase.hpp"

#include <cmath>

#include "mtr/core/error.hpp"
#include "mtr/core/mask_ops.hpp"

namespace mtr::infer {

namespace {

int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

int round_up(int v, int m) { return (v + m - 1) / m * m; }

}  // namespace

MaskTensor coarse_mask_for(const EraseRegion& region, int height, int width) {
  if (const auto* polys = std::get_if<std::vector<PolygonBox>>(&region)) {
    for (std::size_t i = 0; i < polys->size(); ++i) {
      const auto& v = (*polys)[i].vertices;
      if (v.size() < 3) {
        throw InvalidArgument("polygon " + std::to_string(i) + " needs at least 3 vertices");
      }
      for (const auto& p : v) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
          throw InvalidArgument("polygon " + std::to_string(i) + " has a non-finite vertex");
        }
      }
    }
    return rasterize_boxes(*polys, height, width);
  }
  if (const auto* mask = std::get_if<MaskTensor>(&region)) {
    if (mask->height() != height || mask->width() != width) {
      throw InvalidArgument("mask is " + std::to_string(mask->height()) + "x" +
                            std::to_string(mask->width()) + ", image is " + std::to_string(height) +
                            "x" + std::to_string(width));
    }
    return mask->binarize(0.5f);
  }
  return MaskTensor::ones(height, width);
}

ImageTensor reflect_pad(const ImageTensor& image, int bottom, int right) {
  if (bottom < 0 || right < 0) throw InvalidArgument("reflect_pad: negative padding");
  if (bottom == 0 && right == 0) return image;
  const int h = image.height(), w = image.width(), c = image.channels();
  ImageTensor out(h + bottom, w + right, c);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int k = 0; k < c; ++k) out.at(y, x, k) = image.at(mirror(y, h), mirror(x, w), k);
    }
  }
  return out;
}

MaskTensor reflect_pad(const MaskTensor& mask, int bottom, int right) {
  if (bottom < 0 || right < 0) throw InvalidArgument("reflect_pad: negative padding");
  if (bottom == 0 && right == 0) return mask;
  const int h = mask.height(), w = mask.width();
  MaskTensor out(h + bottom, w + right);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) out.at(y, x) = mask.at(mirror(y, h), mirror(x, w));
  }
  return out;
}

ImageTensor crop(const ImageTensor& image, int height, int width) {
  if (height > image.height() || width > image.width()) throw InvalidArgument("crop exceeds the image");
  if (height == image.height() && width == image.width()) return image;
  ImageTensor out(height, width, image.channels());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int k = 0; k < image.channels(); ++k) out.at(y, x, k) = image.at(y, x, k);
    }
  }
  return out;
}

MaskTensor crop(const MaskTensor& mask, int height, int width) {
  if (height > mask.height() || width > mask.width()) throw InvalidArgument("crop exceeds the mask");
  if (height == mask.height() && width == mask.width()) return mask;
  MaskTensor out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.at(y, x) = mask.at(y, x);
  }
  return out;
}

EraseResult erase(const InpaintingModel& model, const EraseRequest& request) {
  const auto& image = request.image;
  if (image.empty() || image.channels() != 3) {
    throw InvalidArgument("erase: expected a nonempty RGB image, got " + image.shape_string());
  }
  const auto& opt = request.options;
  if (opt.dilation_radius < 0) throw InvalidArgument("erase: dilation_radius must be >= 0");
  if (!(opt.mask_threshold >= 0.0f && opt.mask_threshold <= 1.0f)) {
    throw InvalidArgument("erase: mask_threshold must lie in [0,1]");
  }
  const int h = image.height(), w = image.width();
  EraseResult result;
  result.coarse_mask = coarse_mask_for(request.region, h, w);

  const int m = std::max(1, model.spatial_multiple());
  const int ph = round_up(h, m) - h, pw = round_up(w, m) - w;
  ModelOutputs out = model.run(reflect_pad(image, ph, pw), reflect_pad(result.coarse_mask, ph, pw));
  out.refined_mask = crop(out.refined_mask, h, w);

  const auto selected = out.refined_mask.binarize(opt.mask_threshold).intersect(result.coarse_mask);
  result.removal_mask = dilate_disk(selected, opt.dilation_radius).intersect(result.coarse_mask);
  const auto fine = crop(out.fine, h, w);
  result.composite_fine = composite(fine, image, result.removal_mask);

  if (opt.return_intermediates) {
    Intermediates im;
    im.refined_mask = out.refined_mask;
    im.coarse = crop(out.coarse, h, w);
    im.coarse_composite = crop(out.coarse_composite, h, w);
    im.fine = fine;
    for (const auto& a : out.attention_maps) im.attention_maps.push_back(a);
    result.intermediates = std::move(im);
  }
  return result;
}

}  // namespace mtr::infer
