#include "mtr/infer/generator_model.hpp"

#include "mtr/core/error.hpp"
#include "mtr/nn/convert.hpp"
#include "mtr/train/checkpoint.hpp"

namespace mtr::infer {

GeneratorModel::GeneratorModel(nn::Generator generator, std::string id, std::int64_t step)
    : generator_(std::move(generator)), id_(std::move(id)), step_(step) {
  generator_->eval();
  for (auto& p : generator_->parameters()) p.set_requires_grad(false);
}

std::shared_ptr<GeneratorModel> GeneratorModel::from_checkpoint(const std::filesystem::path& path) {
  auto loaded = train::load_generator(path);
  return std::make_shared<GeneratorModel>(loaded.generator, loaded.checkpoint_id, loaded.step);
}

ModelOutputs GeneratorModel::run(const ImageTensor& input, const MaskTensor& coarse_mask) const {
  if (!coarse_mask.same_extent(input)) throw InvalidArgument("model input and mask extents differ");
  if (input.height() % 4 != 0 || input.width() % 4 != 0) {
    throw InvalidArgument("model input " + input.shape_string() + " is not a multiple of 4");
  }
  torch::NoGradGuard no_grad;
  const auto out = generator_->forward(nn::to_tensor(input), nn::to_tensor(coarse_mask));
  ModelOutputs r;
  r.refined_mask = nn::to_mask(out.refined_mask);
  r.coarse = nn::to_image(out.coarse);
  r.coarse_composite = nn::to_image(out.coarse_composite);
  r.fine = nn::to_image(out.fine);
  r.fine_composite = nn::to_image(out.fine_composite);
  for (const auto& a : out.attention) r.attention_maps.push_back(nn::to_mask(a));
  return r;
}

}  // namespace mtr::infer
