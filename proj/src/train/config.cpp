#include "mtr/train/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mtr/core/error.hpp"
#include "mtr/io/json_fields.hpp"

namespace mtr::train {

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::full:
      return "full";
    case Ablation::no_mask_refine_branch:
      return "no_mask_refine_branch";
    case Ablation::no_attention:
      return "no_attention";
    case Ablation::no_mask_refine_loss:
      return "no_mask_refine_loss";
  }
  return "full";
}

Ablation ablation_from_string(const std::string& s) {
  for (auto a : {Ablation::full, Ablation::no_mask_refine_branch, Ablation::no_attention,
                 Ablation::no_mask_refine_loss}) {
    if (to_string(a) == s) return a;
  }
  throw InvalidArgument("unknown ablation '" + s + "'");
}

void TrainConfig::validate() const {
  if (image_size < 4 || image_size % 4 != 0) throw InvalidArgument("image_size must be a positive multiple of 4");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(g_lr > 0.0)) throw InvalidArgument("g_lr must be > 0");
  if (!(d_lr_multiplier > 0.0)) throw InvalidArgument("d_lr_multiplier must be > 0");
  if (max_lr_drops < 0 || max_lr_drops > 2) throw InvalidArgument("max_lr_drops must be in [0, 2]");
  if (!(lr_drop_factor >= 1.0)) throw InvalidArgument("lr_drop_factor must be >= 1");
  if (plateau_window < 1) throw InvalidArgument("plateau_window must be >= 1");
  if (max_steps < 0) throw InvalidArgument("max_steps must be >= 0");
  loss.validate();
  effective_generator().validate();
  discriminator.validate();
  features.validate();
}

nn::GeneratorConfig TrainConfig::effective_generator() const {
  auto g = generator;
  if (ablation == Ablation::no_mask_refine_branch) {
    g.use_mask_refine = false;
    g.use_attention = false;
  }
  if (ablation == Ablation::no_attention) g.use_attention = false;
  return g;
}

losses::LossWeights TrainConfig::effective_loss() const {
  auto w = loss;
  if (ablation == Ablation::no_mask_refine_branch || ablation == Ablation::no_mask_refine_loss) {
    w.mask_refine_enabled = false;
  }
  return w;
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = {{"image_size", c.image_size},
                      {"batch_size", c.batch_size},
                      {"g_lr", c.g_lr},
                      {"d_lr_multiplier", c.d_lr_multiplier},
                      {"adam_beta1", c.adam_beta1},
                      {"adam_beta2", c.adam_beta2},
                      {"lr_drop_factor", c.lr_drop_factor},
                      {"max_lr_drops", c.max_lr_drops},
                      {"plateau_window", c.plateau_window},
                      {"plateau_min_rel_improvement", c.plateau_min_rel_improvement},
                      {"max_steps", c.max_steps},
                      {"seed", c.seed},
                      {"loss", losses::to_json(c.loss)},
                      {"ablation", to_string(c.ablation)},
                      {"generator", nn::to_json(c.generator)},
                      {"discriminator", nn::to_json(c.discriminator)},
                      {"features", losses::to_json(c.features)},
                      {"augment",
                       {{"drop_rate", c.augment.drop_rate}, {"full_pad_prob", c.augment.full_pad_prob}}}};
  j["feature_weights"] = c.feature_weights ? nlohmann::json(*c.feature_weights) : nlohmann::json();
  j["augment"]["max_pad_exclusive"] =
      c.augment.max_pad_exclusive ? nlohmann::json(*c.augment.max_pad_exclusive) : nlohmann::json();
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  io::FieldReader r(j, "train config");
  r.get("image_size", c.image_size);
  r.get("batch_size", c.batch_size);
  r.get("g_lr", c.g_lr);
  r.get("d_lr_multiplier", c.d_lr_multiplier);
  r.get("adam_beta1", c.adam_beta1);
  r.get("adam_beta2", c.adam_beta2);
  r.get("lr_drop_factor", c.lr_drop_factor);
  r.get("max_lr_drops", c.max_lr_drops);
  r.get("plateau_window", c.plateau_window);
  r.get("plateau_min_rel_improvement", c.plateau_min_rel_improvement);
  r.get("max_steps", c.max_steps);
  r.get("seed", c.seed);
  std::string ablation;
  if (r.get("ablation", ablation)) {
    try {
      c.ablation = ablation_from_string(ablation);
    } catch (const InvalidArgument& e) {
      throw SchemaError(std::string("train config: ") + e.what());
    }
  }
  // Nested sections merge over the current values.
  auto merge = [](nlohmann::json base, const nlohmann::json* patch) {
    if (patch) {
      if (!patch->is_object()) throw SchemaError("train config: nested section must be an object");
      base.update(*patch);
    }
    return base;
  };
  if (auto* p = r.child("loss")) c.loss = losses::loss_weights_from_json(merge(losses::to_json(c.loss), p));
  if (auto* p = r.child("generator")) c.generator = nn::generator_config_from_json(merge(nn::to_json(c.generator), p));
  if (auto* p = r.child("discriminator")) {
    c.discriminator = nn::discriminator_config_from_json(merge(nn::to_json(c.discriminator), p));
  }
  if (auto* p = r.child("features")) c.features = losses::vgg_config_from_json(merge(losses::to_json(c.features), p));
  std::string weights;
  if (r.get("feature_weights", weights)) c.feature_weights = weights;
  if (auto* p = r.child("augment")) {
    io::FieldReader a(*p, "train config augment");
    a.get("drop_rate", c.augment.drop_rate);
    a.get("full_pad_prob", c.augment.full_pad_prob);
    int bound = 0;
    if (a.get("max_pad_exclusive", bound)) c.augment.max_pad_exclusive = bound;
    a.finish();
  }
  r.finish();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("train config: ") + e.what());
  }
  return c;
}

double gt_replace_prob(std::int64_t step) {
  if (step < 0) throw InvalidArgument("step must be >= 0");
  // Integer tenths keep the table exact (0.9, not 1 - 0.1).
  const std::int64_t tenths = std::max<std::int64_t>(10 - step / 2000, 1);
  return static_cast<double>(tenths) / 10.0;
}

double TrainState::g_lr(const TrainConfig& c) const {
  return c.g_lr / std::pow(c.lr_drop_factor, drops_applied);
}

double TrainState::d_lr(const TrainConfig& c) const { return g_lr(c) * c.d_lr_multiplier; }

std::string serialize_rng(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 deserialize_rng(const std::string& text) {
  std::istringstream is(text);
  std::mt19937_64 rng;
  is >> rng;
  if (is.fail()) throw SchemaError("rng_state is malformed");
  return rng;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

bool plateau_reached(const std::vector<double>& previous, const std::vector<double>& last,
                     double min_rel_improvement) {
  if (previous.empty() || last.empty()) throw InvalidArgument("plateau windows must be nonempty");
  const double before = median(previous);
  const double after = median(last);
  const double scale = std::abs(before);
  const double improvement = scale > 0.0 ? (before - after) / scale : before - after;
  return improvement < min_rel_improvement;
}

bool record_loss_and_maybe_drop(TrainState& state, const TrainConfig& config, double loss) {
  const auto w = static_cast<std::size_t>(config.plateau_window);
  state.loss_history.push_back(loss);
  if (state.loss_history.size() < 2 * w) return false;
  while (state.loss_history.size() > 2 * w) state.loss_history.pop_front();
  const std::vector<double> previous(state.loss_history.begin(), state.loss_history.begin() + w);
  const std::vector<double> last(state.loss_history.begin() + w, state.loss_history.end());
  if (state.drops_applied < config.max_lr_drops &&
      plateau_reached(previous, last, config.plateau_min_rel_improvement)) {
    ++state.drops_applied;
    state.loss_history.clear();
    return true;
  }
  state.loss_history.pop_front();
  return false;
}

}  // namespace mtr::train
