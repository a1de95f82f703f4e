#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mtr/core/error.hpp"
#include "mtr/core/mask_ops.hpp"
#include "mtr/data/synth.hpp"
#include "mtr/eval/metrics.hpp"
#include "mtr/infer/erase.hpp"
#include "mtr/infer/generator_model.hpp"

namespace py = pybind11;
using namespace mtr;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

ImageTensor to_image(const FloatArray& a) {
  if (a.ndim() != 3) throw InvalidArgument("image must be an H x W x C array");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1)), c = static_cast<int>(a.shape(2));
  return ImageTensor(h, w, c, std::vector<float>(a.data(), a.data() + a.size()));
}

MaskTensor to_mask(const FloatArray& a) {
  if (a.ndim() != 2) throw InvalidArgument("mask must be an H x W array");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  return MaskTensor(h, w, std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray from_image(const ImageTensor& img) {
  FloatArray out({img.height(), img.width(), img.channels()});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

FloatArray from_mask(const MaskTensor& m) {
  FloatArray out({m.height(), m.width()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

using Polygon = std::vector<std::pair<double, double>>;

std::vector<PolygonBox> to_boxes(const std::vector<Polygon>& polygons) {
  std::vector<PolygonBox> boxes;
  for (const auto& poly : polygons) {
    PolygonBox b;
    for (const auto& [x, y] : poly) b.vertices.push_back({x, y});
    boxes.push_back(std::move(b));
  }
  return boxes;
}

std::vector<Polygon> from_boxes(const std::vector<PolygonBox>& boxes) {
  std::vector<Polygon> out;
  for (const auto& b : boxes) {
    Polygon p;
    for (const auto& v : b.vertices) p.emplace_back(v.x, v.y);
    out.push_back(std::move(p));
  }
  return out;
}

py::dict run_erase(const InpaintingModel& model, const FloatArray& image, std::optional<FloatArray> mask,
               std::optional<std::vector<Polygon>> polygons, bool erase_all, int dilation_radius,
               float threshold, bool intermediates) {
  const int given = mask.has_value() + polygons.has_value() + erase_all;
  if (given != 1) throw InvalidArgument("exactly one of mask, polygons, erase_all is required");
  infer::EraseRequest req;
  req.image = to_image(image);
  if (mask) req.region = to_mask(*mask);
  if (polygons) req.region = to_boxes(*polygons);
  if (erase_all) req.region = infer::EraseAll{};
  req.options.dilation_radius = dilation_radius;
  req.options.mask_threshold = threshold;
  req.options.return_intermediates = intermediates;
  infer::EraseResult r;
  {
    py::gil_scoped_release release;
    r = infer::erase(model, req);
  }
  py::dict out;
  out["image"] = from_image(r.composite_fine);
  out["coarse_mask"] = from_mask(r.coarse_mask);
  out["removal_mask"] = from_mask(r.removal_mask);
  if (r.intermediates) {
    const auto& i = *r.intermediates;
    out["refined_mask"] = from_mask(i.refined_mask);
    out["coarse"] = from_image(i.coarse);
    out["coarse_composite"] = from_image(i.coarse_composite);
    out["fine"] = from_image(i.fine);
    py::list maps;
    for (const auto& a : i.attention_maps) maps.append(from_mask(a));
    out["attention_maps"] = maps;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mask-based scene text removal";

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("psnr", [](const FloatArray& a, const FloatArray& b) { return eval::psnr(to_image(a), to_image(b)); },
        py::arg("a"), py::arg("b"), "PSNR in dB for images in [0, 1]; inf when identical.");
  m.def(
      "ssim",
      [](const FloatArray& a, const FloatArray& b, int window, double sigma) {
        eval::SsimOptions o;
        o.window = window;
        o.sigma = sigma;
        return eval::ssim(to_image(a), to_image(b), o);
      },
      py::arg("a"), py::arg("b"), py::arg("window") = 11, py::arg("sigma") = 1.5,
      "Gaussian-window SSIM over valid windows, averaged over channels.");
  m.def(
      "mse_mae_pct",
      [](const FloatArray& a, const FloatArray& b) {
        const auto e = eval::mse_mae_pct(to_image(a), to_image(b));
        return std::make_pair(e.mse_pct, e.mae_pct);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "mask_prf",
      [](const FloatArray& pred, const FloatArray& gt, float threshold) {
        const auto s = eval::mask_prf(to_mask(pred), to_mask(gt), threshold);
        py::dict d;
        d["precision"] = s.precision;
        d["recall"] = s.recall;
        d["f1"] = s.f1;
        return d;
      },
      py::arg("pred"), py::arg("gt"), py::arg("threshold") = 0.5f);

  m.def(
      "rasterize_boxes",
      [](const std::vector<Polygon>& polygons, int height, int width) {
        return from_mask(rasterize_boxes(to_boxes(polygons), height, width));
      },
      py::arg("polygons"), py::arg("height"), py::arg("width"));
  m.def("pad_mask", [](const FloatArray& mask, int n) { return from_mask(pad_mask(to_mask(mask), n)); },
        py::arg("mask"), py::arg("n"), "Square dilation by n pixels; n >= max(H, W) covers the image.");
  m.def("dilate_disk", [](const FloatArray& mask, int r) { return from_mask(dilate_disk(to_mask(mask), r)); },
        py::arg("mask"), py::arg("radius"));
  m.def(
      "composite",
      [](const FloatArray& predicted, const FloatArray& original, const FloatArray& mask) {
        return from_image(composite(to_image(predicted), to_image(original), to_mask(mask)));
      },
      py::arg("predicted"), py::arg("original"), py::arg("mask"));

  m.def(
      "generate_sample",
      [](int size, std::uint64_t seed, std::uint64_t index) {
        const auto s = data::generate_sample(data::SynthConfig::for_size(size, seed), index);
        py::dict d;
        d["input"] = from_image(s.input);
        d["target"] = from_image(s.target);
        d["gt_text_mask"] = from_mask(s.gt_text_mask);
        d["boxes"] = from_boxes(s.boxes);
        return d;
      },
      py::arg("size"), py::arg("seed"), py::arg("index"), "One synthetic training triple.");

  py::class_<infer::GeneratorModel, std::shared_ptr<infer::GeneratorModel>>(m, "Model")
      .def(py::init([](const std::string& path) { return infer::GeneratorModel::from_checkpoint(path); }),
           py::arg("checkpoint"))
      .def_property_readonly("id", &infer::GeneratorModel::id)
      .def_property_readonly("step", &infer::GeneratorModel::step)
      .def(
          "erase",
          [](const infer::GeneratorModel& self, const FloatArray& image, std::optional<FloatArray> mask,
             std::optional<std::vector<Polygon>> polygons, bool erase_all, int dilation_radius, float threshold,
             bool intermediates) {
            return run_erase(self, image, mask, polygons, erase_all, dilation_radius, threshold, intermediates);
          },
          py::arg("image"), py::kw_only(), py::arg("mask") = py::none(), py::arg("polygons") = py::none(),
          py::arg("erase_all") = false, py::arg("dilation_radius") = 7, py::arg("threshold") = 0.5f,
          py::arg("intermediates") = false,
          "Removes text inside the region. Pixels outside it come back unchanged.");
}
