#include "mtr/train/trainer.hpp"

#include <cmath>
#include <numeric>

#include "mtr/core/error.hpp"
#include "mtr/nn/convert.hpp"
#include "mtr/train/checkpoint.hpp"

namespace mtr::train {

nlohmann::json to_json(const StepMetrics& m) {
  return {{"step", m.step},         {"L_MR", m.l_mr},     {"L_L1", m.l_l1},
          {"L_perc", m.l_perc},     {"L_style", m.l_style}, {"L_advG", m.l_adv_g},
          {"L_D", m.l_d},           {"g_lr", m.g_lr},     {"gt_replace_p", m.gt_replace_p}};
}

Batch make_batch(const std::vector<data::AugmentedSample>& samples) {
  if (samples.empty()) throw InvalidArgument("batch is empty");
  std::vector<ImageTensor> inputs, targets;
  std::vector<MaskTensor> coarse, boxes, gts;
  for (const auto& s : samples) {
    inputs.push_back(s.input);
    targets.push_back(s.target);
    coarse.push_back(s.coarse_mask);
    boxes.push_back(s.box_mask);
    gts.push_back(s.gt_refined_mask);
  }
  return {nn::stack_images(inputs), nn::stack_masks(coarse), nn::stack_masks(boxes),
          nn::stack_images(targets), nn::stack_masks(gts)};
}

namespace {

torch::optim::AdamOptions adam_options(double lr, const TrainConfig& c) {
  return torch::optim::AdamOptions(lr).betas({c.adam_beta1, c.adam_beta2});
}

void set_lr(torch::optim::Adam& opt, double lr) {
  for (auto& group : opt.param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

double lr_of(const torch::optim::Adam& opt) {
  return static_cast<const torch::optim::AdamOptions&>(opt.param_groups().front().options()).lr();
}

void set_requires_grad(torch::nn::Module& m, bool on) {
  for (auto& p : m.parameters()) p.set_requires_grad(on);
}

double finite_value(const torch::Tensor& t, const char* component) {
  const double v = t.detach().item<double>();
  if (!std::isfinite(v)) {
    throw NumericError(component, std::string("loss component ") + component + " is not finite");
  }
  return v;
}

void append_optimizer(io::Archive& archive, const std::string& prefix, const torch::optim::Adam& opt,
                      const torch::nn::Module& module) {
  auto& state = const_cast<torch::optim::Adam&>(opt).state();
  for (const auto& item : module.named_parameters()) {
    auto it = state.find(item.value().unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    const std::string stem = prefix + "." + item.key();
    archive.tensors.push_back(nn::to_record(stem + ".step", torch::tensor({s.step()}, torch::kInt64)));
    archive.tensors.push_back(nn::to_record(stem + ".exp_avg", s.exp_avg()));
    archive.tensors.push_back(nn::to_record(stem + ".exp_avg_sq", s.exp_avg_sq()));
  }
}

struct PendingAdamState {
  void* key;
  std::int64_t step;
  torch::Tensor exp_avg;
  torch::Tensor exp_avg_sq;
};

std::vector<PendingAdamState> read_optimizer(const io::Archive& archive, const std::string& prefix,
                                             const torch::nn::Module& module) {
  std::vector<PendingAdamState> out;
  for (const auto& item : module.named_parameters()) {
    const std::string stem = prefix + "." + item.key();
    const auto* step = archive.find(stem + ".step");
    if (!step) continue;
    const auto* m = archive.find(stem + ".exp_avg");
    const auto* v = archive.find(stem + ".exp_avg_sq");
    if (!m || !v) throw SchemaError("optimizer state for '" + stem + "' is incomplete");
    auto mt = nn::from_record(*m);
    auto vt = nn::from_record(*v);
    auto st = nn::from_record(*step);
    if (mt.sizes() != item.value().sizes() || vt.sizes() != item.value().sizes() ||
        st.numel() != 1 || st.scalar_type() != torch::kInt64) {
      throw SchemaError("optimizer state for '" + stem + "' has the wrong shape");
    }
    out.push_back({item.value().unsafeGetTensorImpl(), st.item<std::int64_t>(), mt, vt});
  }
  return out;
}

void install_optimizer(torch::optim::Adam& opt, const std::vector<PendingAdamState>& pending) {
  auto& state = opt.state();
  state.clear();
  for (const auto& p : pending) {
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->step(p.step);
    s->exp_avg(p.exp_avg);
    s->exp_avg_sq(p.exp_avg_sq);
    state[p.key] = std::move(s);
  }
}

}  // namespace

Trainer::Trainer(TrainConfig config, std::vector<AnnotatedSample> data)
    : config_(std::move(config)), data_(std::move(data)) {
  config_.validate();
  weights_ = config_.effective_loss();
  if (data_.empty()) throw InvalidArgument("training data is empty");
  for (const auto& s : data_) {
    validate_sample(s);
    if (s.input.height() != config_.image_size || s.input.width() != config_.image_size) {
      throw InvalidArgument("training sample is " + s.input.shape_string() + ", expected " +
                            std::to_string(config_.image_size) + "x" + std::to_string(config_.image_size));
    }
  }
  torch::manual_seed(config_.seed);
  generator_ = nn::Generator(config_.effective_generator());
  discriminator_ = nn::Discriminator(config_.discriminator);
  if (config_.feature_weights) {
    features_ = losses::VggFeatures::from_archive(*config_.feature_weights);
  } else {
    features_ = std::make_shared<losses::VggFeatures>(config_.features);
  }
  g_opt_ = std::make_unique<torch::optim::Adam>(generator_->parameters(),
                                                adam_options(state_.g_lr(config_), config_));
  d_opt_ = std::make_unique<torch::optim::Adam>(discriminator_->parameters(),
                                                adam_options(state_.d_lr(config_), config_));
  state_.rng.seed(config_.seed);
}

StepMetrics Trainer::step() {
  auto& rng = state_.rng;
  const std::size_t n = data_.size();
  const auto b = static_cast<std::size_t>(config_.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < b; ++i) {
    if (n >= b) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(order[i], order[pick(rng)]);
      picks.push_back(order[i]);
    } else {
      picks.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    }
  }
  std::vector<data::AugmentedSample> samples;
  for (auto idx : picks) samples.push_back(data::augment(data_[idx], rng, config_.augment));
  const bool use_gt = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < gt_replace_prob(state_.step);
  return train_on(make_batch(samples), use_gt);
}

StepMetrics Trainer::train_on(const Batch& batch, bool use_gt_mask) {
  StepMetrics m;
  m.gt_replace_p = gt_replace_prob(state_.step);
  m.gt_mask_used = use_gt_mask;
  m.g_lr = g_lr();
  const auto n = batch.input.size(0);

  generator_->train();
  discriminator_->train();
  set_requires_grad(*discriminator_, true);
  const auto out = generator_->forward(batch.input, batch.coarse_mask,
                                       use_gt_mask ? std::optional(batch.gt_mask) : std::nullopt);
  const auto fakes = torch::cat({out.coarse, out.coarse_composite, out.fine, out.fine_composite}, 0);

  // Discriminator update: real and the four detached fakes in one pass.
  {
    const auto scores = discriminator_->forward(torch::cat({batch.target, fakes.detach()}, 0),
                                                batch.box_mask.repeat({5, 1, 1, 1}));
    auto parts = scores.split(n, 0);
    const auto l_d = losses::hinge_d(parts[0], {parts.begin() + 1, parts.end()});
    m.l_d = finite_value(l_d, "L_D");
    d_opt_->zero_grad();
    l_d.backward();
    d_opt_->step();
  }
  if (observer_) observer_(Phase::discriminator);

  // Generator update against the frozen, freshly updated discriminator.
  discriminator_->eval();
  set_requires_grad(*discriminator_, false);
  losses::LossParts parts;
  {
    const auto scores = discriminator_->forward(fakes, batch.box_mask.repeat({4, 1, 1, 1})).split(n, 0);
    parts.adv_g = losses::hinge_g({scores.begin(), scores.end()});
  }
  const auto w = losses::region_weight_mask(batch.box_mask, weights_.lambda_region);
  parts.l1 = losses::weighted_l1(out.coarse, batch.target, w) + losses::weighted_l1(out.fine, batch.target, w);
  std::vector<torch::Tensor> gt_features;
  {
    torch::NoGradGuard no_grad;
    gt_features = features_->features(batch.target);
  }
  const auto fc = losses::weighted_feature_losses(out.coarse, batch.target, w, *features_, &gt_features);
  const auto ff = losses::weighted_feature_losses(out.fine, batch.target, w, *features_, &gt_features);
  parts.perceptual = fc.perceptual + ff.perceptual;
  parts.style = fc.style + ff.style;
  parts.mask_refine = generator_->config().use_mask_refine
                          ? losses::tversky_loss(out.refined_mask, batch.gt_mask, weights_.alpha, weights_.beta)
                          : torch::zeros({});
  const auto total = losses::total_generator_loss(parts, weights_);
  g_opt_->zero_grad();
  total.backward();
  g_opt_->step();
  set_requires_grad(*discriminator_, true);
  discriminator_->train();
  if (observer_) observer_(Phase::generator);

  m.l_mr = parts.mask_refine.item<double>();
  m.l_l1 = parts.l1.item<double>();
  m.l_perc = parts.perceptual.item<double>();
  m.l_style = parts.style.item<double>();
  m.l_adv_g = parts.adv_g.item<double>();
  m.total_g = total.item<double>();

  ++state_.step;
  m.step = state_.step;
  if (record_loss_and_maybe_drop(state_, config_, m.total_g)) {
    set_learning_rates(state_.g_lr(config_), state_.d_lr(config_));
    m.lr_dropped = true;
  }
  return m;
}

void Trainer::set_learning_rates(double g, double d) {
  set_lr(*g_opt_, g);
  set_lr(*d_opt_, d);
}

double Trainer::g_lr() const { return lr_of(*g_opt_); }
double Trainer::d_lr() const { return lr_of(*d_opt_); }

void Trainer::save(const std::filesystem::path& path) const {
  io::Archive archive;
  archive.manifest = {{"schema_version", kCheckpointSchemaVersion},
                      {"step", state_.step},
                      {"generator_config", nn::to_json(generator_->config())},
                      {"discriminator_config", nn::to_json(discriminator_->config())},
                      {"rng_state", serialize_rng(state_.rng)},
                      {"train_state",
                       {{"drops_applied", state_.drops_applied},
                        {"loss_history", std::vector<double>(state_.loss_history.begin(),
                                                             state_.loss_history.end())}}},
                      {"train_config", to_json(config_)}};
  append_module(archive, "generator", *generator_);
  append_module(archive, "discriminator", *discriminator_);
  append_optimizer(archive, "optimizer.generator", *g_opt_, *generator_);
  append_optimizer(archive, "optimizer.discriminator", *d_opt_, *discriminator_);
  io::write_archive(path, archive);
}

void Trainer::load(const std::filesystem::path& path) {
  const auto archive = io::read_archive(path);
  const auto& mf = archive.manifest;
  check_schema_version(mf);
  TrainState next;
  try {
    if (nn::generator_config_from_json(mf.at("generator_config")) != generator_->config()) {
      throw SchemaError("checkpoint generator_config differs from the training config");
    }
    if (nn::discriminator_config_from_json(mf.at("discriminator_config")) != discriminator_->config()) {
      throw SchemaError("checkpoint discriminator_config differs from the training config");
    }
    next.step = mf.at("step").get<std::int64_t>();
    next.rng = deserialize_rng(mf.at("rng_state").get<std::string>());
    const auto& ts = mf.at("train_state");
    next.drops_applied = ts.at("drops_applied").get<int>();
    for (double v : ts.at("loss_history").get<std::vector<double>>()) next.loss_history.push_back(v);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint manifest is malformed: ") + e.what());
  }
  if (next.step < 0 || next.drops_applied < 0 || next.drops_applied > config_.max_lr_drops) {
    throw SchemaError("checkpoint train_state is out of range");
  }
  check_module(archive, "generator", *generator_);
  check_module(archive, "discriminator", *discriminator_);
  const auto g_pending = read_optimizer(archive, "optimizer.generator", *generator_);
  const auto d_pending = read_optimizer(archive, "optimizer.discriminator", *discriminator_);

  restore_module(archive, "generator", *generator_);
  restore_module(archive, "discriminator", *discriminator_);
  install_optimizer(*g_opt_, g_pending);
  install_optimizer(*d_opt_, d_pending);
  state_ = std::move(next);
  set_learning_rates(state_.g_lr(config_), state_.d_lr(config_));
}

}  // namespace mtr::train
