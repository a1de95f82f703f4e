#include "cli.hpp"

#include <CLI11.hpp>
#include <torch/torch.h>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "mtr/core/error.hpp"
#include "mtr/data/augment.hpp"
#include "mtr/data/dataset.hpp"
#include "mtr/data/synth.hpp"
#include "mtr/eval/evaluate.hpp"
#include "mtr/infer/erase.hpp"
#include "mtr/infer/generator_model.hpp"
#include "mtr/io/annotations.hpp"
#include "mtr/io/png.hpp"
#include "mtr/service/service.hpp"
#include "mtr/train/trainer.hpp"

namespace mtr::cli {

namespace {

namespace fs = std::filesystem;

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<int> parse_pads(const std::string& text) {
  std::vector<int> pads;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || v < 0) {
      throw CLI::ValidationError("--pads", "expected comma-separated non-negative integers, got '" + text + "'");
    }
    pads.push_back(v);
  }
  if (pads.empty()) throw CLI::ValidationError("--pads", "at least one pad is required");
  return pads;
}

struct SynthArgs {
  std::size_t n = 16;
  int size = 64;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  bool no_masks = false;
};

int synth_data(const SynthArgs& a, std::ostream& out) {
  auto config = data::SynthConfig::for_size(a.size, a.seed);
  if (!a.config.empty()) {
    auto doc = read_json_file(a.config);
    doc["image_size"] = a.size;
    doc["seed"] = a.seed;
    config = data::synth_config_from_json(doc);
  }
  config.validate();
  std::vector<AnnotatedSample> samples;
  for (std::size_t i = 0; i < a.n; ++i) samples.push_back(data::generate_sample(config, i));
  data::write_dataset(a.out, samples, {{"generator", "synth"}, {"count", a.n}, {"config", data::to_json(config)}},
                      !a.no_masks);
  out << "wrote " << a.n << " samples to " << a.out << "\n";
  return kExitOk;
}

struct MaskArgs {
  std::string data;
  int threshold = 25;
};

int make_masks(const MaskArgs& a, std::ostream& out) {
  const data::DatasetReader reader(a.data, a.threshold);
  fs::create_directories(fs::path(a.data) / "mask");
  for (std::size_t i = 0; i < reader.size(); ++i) {
    const auto& name = reader.names()[i];
    const fs::path root(a.data);
    const auto input = io::read_png_rgb(root / "input" / (name + ".png"));
    const auto target = io::read_png_rgb(root / "target" / (name + ".png"));
    const auto boxes = io::read_boxes(root / "boxes" / (name + ".json"));
    io::write_png(root / "mask" / (name + ".png"), data::derive_refined_mask(input, target, boxes, a.threshold));
  }
  out << "wrote " << reader.size() << " masks to " << (fs::path(a.data) / "mask").string() << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string resume;
  std::string metrics;
  std::string ablation;
  std::string feature_weights;
  std::optional<std::int64_t> steps;
  std::optional<std::uint64_t> seed;
  std::optional<int> batch_size;
  std::optional<int> image_size;
  std::int64_t save_every = 0;
  int threads = 0;
};

int train(const TrainArgs& a, std::ostream& out) {
  train::TrainConfig config;
  if (!a.config.empty()) config = train::train_config_from_json(read_json_file(a.config));
  if (a.steps) config.max_steps = *a.steps;
  if (a.seed) config.seed = *a.seed;
  if (a.batch_size) config.batch_size = *a.batch_size;
  if (a.image_size) config.image_size = *a.image_size;
  if (!a.ablation.empty()) config.ablation = train::ablation_from_string(a.ablation);
  if (!a.feature_weights.empty()) config.feature_weights = a.feature_weights;
  if (a.threads > 0) torch::set_num_threads(a.threads);

  train::Trainer trainer(config, data::load_dataset(a.data));
  if (!a.resume.empty()) trainer.load(a.resume);
  std::ofstream metrics;
  if (!a.metrics.empty()) {
    metrics.open(a.metrics, std::ios::app);
    if (!metrics) throw IoError("cannot open " + a.metrics);
  }
  while (trainer.state().step < config.max_steps) {
    const auto m = trainer.step();
    if (metrics.is_open()) metrics << train::to_json(m).dump() << std::endl;
    if (a.save_every > 0 && m.step % a.save_every == 0) trainer.save(a.out);
  }
  trainer.save(a.out);
  out << "trained to step " << trainer.state().step << ", checkpoint " << a.out << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string pads = "0";
  std::string json;
  float threshold = 0.5f;
  std::optional<int> dilation;
};

int evaluate(const EvalArgs& a, std::ostream& out) {
  const auto pads = parse_pads(a.pads);
  const auto model = infer::GeneratorModel::from_checkpoint(a.checkpoint);
  const data::DatasetReader reader(a.data);
  eval::SampleSource source{reader.size(), [&](std::size_t i) { return reader.load(i); },
                            [&](std::size_t i) { return reader.names()[i]; }};
  eval::EvalOptions options;
  options.mask_threshold = a.threshold;
  options.dilation_radius = a.dilation;
  std::vector<eval::EvalReport> reports;
  for (int pad : pads) reports.push_back(eval::evaluate(*model, source, pad, options));
  const auto doc = eval::to_json(reports);
  if (!a.json.empty()) write_text(a.json, doc.dump(2) + "\n");
  out << eval::format_table(reports);
  return kExitOk;
}

struct InferArgs {
  std::string image;
  std::string checkpoint;
  std::string out;
  std::string mask;
  std::string polygons;
  bool all = false;
  int dilation = 7;
  float threshold = 0.5f;
  std::string intermediates;
};

int infer_cmd(const InferArgs& a, std::ostream& out) {
  infer::EraseRequest req;
  req.image = io::read_png_rgb(a.image);
  if (a.all) {
    req.region = infer::EraseAll{};
  } else if (!a.mask.empty()) {
    req.region = io::read_png_gray(a.mask);
  } else {
    req.region = io::read_boxes(a.polygons);
  }
  req.options.dilation_radius = a.dilation;
  req.options.mask_threshold = a.threshold;
  req.options.return_intermediates = !a.intermediates.empty();
  const auto model = infer::GeneratorModel::from_checkpoint(a.checkpoint);
  const auto result = infer::erase(*model, req);
  io::write_png(a.out, result.composite_fine);
  if (result.intermediates) {
    const fs::path dir(a.intermediates);
    fs::create_directories(dir);
    const auto& im = *result.intermediates;
    io::write_png(dir / "refined_mask.png", im.refined_mask);
    io::write_png(dir / "coarse.png", im.coarse);
    io::write_png(dir / "coarse_composite.png", im.coarse_composite);
    io::write_png(dir / "fine.png", im.fine);
    io::write_png(dir / "removal_mask.png", result.removal_mask);
    for (std::size_t i = 0; i < im.attention_maps.size(); ++i) {
      io::write_png(dir / ("attention_" + std::to_string(i + 1) + ".png"), im.attention_maps[i]);
    }
  }
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

struct ServeArgs {
  std::string checkpoint;
  std::string host = "127.0.0.1";
  int port = 8080;
  int concurrency = 2;
  std::size_t max_body_bytes = service::kDefaultMaxBodyBytes;
  std::string static_dir;
};

std::atomic<bool> g_stop{false};

int serve(const ServeArgs& a, std::ostream& out) {
  service::ServiceOptions options;
  options.host = a.host;
  options.port = a.port;
  options.concurrency = a.concurrency;
  options.max_body_bytes = a.max_body_bytes;
  if (!a.static_dir.empty()) options.static_dir = a.static_dir;
  const std::string path = a.checkpoint;
  service::Service svc(options, [path] { return infer::GeneratorModel::from_checkpoint(path); });
  const int port = svc.bind();
  svc.start_loading();
  out << "listening on http://" << a.host << ":" << port << std::endl;
  g_stop = false;
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  std::thread watcher([&svc] {
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    svc.stop();
  });
  svc.serve();
  g_stop = true;
  watcher.join();
  return kExitOk;
}

std::string error_line(const std::string& kind, const std::string& detail,
                       const std::optional<std::string>& component = std::nullopt) {
  nlohmann::json j = {{"error", kind}, {"detail", detail}};
  if (component) j["component"] = *component;
  return j.dump();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mask-guided scene text removal: training, evaluation and inference", "mtrnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mtrnet 0.1.0");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth-data", "Render a synthetic text-removal dataset");
  s->add_option("--n", synth.n, "Number of samples")->check(CLI::PositiveNumber);
  s->add_option("--size", synth.size, "Square image side")->check(CLI::Range(8, 4096));
  s->add_option("--seed", synth.seed, "Generator seed");
  s->add_option("--config", synth.config, "Synth config JSON")->check(CLI::ExistingFile);
  s->add_flag("--no-masks", synth.no_masks, "Skip the mask/ folder");
  s->add_option("--out", synth.out, "Output dataset root")->required();

  MaskArgs masks;
  auto* mk = app.add_subcommand("make-masks", "Derive pixel text masks from input/target differences");
  mk->add_option("--data", masks.data, "Dataset root")->required()->check(CLI::ExistingDirectory);
  mk->add_option("--threshold", masks.threshold, "Difference threshold in 8-bit units")->check(CLI::Range(0, 255));

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train generator and discriminator");
  t->add_option("--config", tr.config, "Training config JSON")->check(CLI::ExistingFile);
  t->add_option("--data", tr.data, "Dataset root")->required()->check(CLI::ExistingDirectory);
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--resume", tr.resume, "Checkpoint to resume from")->check(CLI::ExistingFile);
  t->add_option("--metrics", tr.metrics, "Append per-step metrics as JSON lines");
  t->add_option("--steps", tr.steps, "Stop at this step (overrides max_steps)");
  t->add_option("--seed", tr.seed, "Seed");
  t->add_option("--batch-size", tr.batch_size, "Batch size");
  t->add_option("--image-size", tr.image_size, "Square training resolution");
  t->add_option("--ablation", tr.ablation, "full, no_mask_refine_branch, no_attention or no_mask_refine_loss");
  t->add_option("--feature-weights", tr.feature_weights, "Pretrained feature archive")->check(CLI::ExistingFile);
  t->add_option("--save-every", tr.save_every, "Also save every N steps");
  t->add_option("--threads", tr.threads, "Intra-op threads");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required()->check(CLI::ExistingFile);
  e->add_option("--data", ev.data, "Dataset root")->required()->check(CLI::ExistingDirectory);
  e->add_option("--pads", ev.pads, "Comma-separated coarse-mask pads");
  e->add_option("--json", ev.json, "Write the JSON report here");
  e->add_option("--threshold", ev.threshold, "Refined-mask threshold")->check(CLI::Range(0.0, 1.0));
  e->add_option("--dilation", ev.dilation, "Compositing disk radius")->check(CLI::NonNegativeNumber);

  InferArgs inf;
  auto* i = app.add_subcommand("infer", "Erase text from one image");
  i->add_option("--image", inf.image, "Input PNG")->required()->check(CLI::ExistingFile);
  i->add_option("--checkpoint", inf.checkpoint, "Checkpoint path")->required()->check(CLI::ExistingFile);
  i->add_option("--out", inf.out, "Output PNG")->required();
  auto* region = i->add_option_group("region", "Exactly one region");
  region->add_option("--mask", inf.mask, "Coarse mask PNG (255 = remove)")->check(CLI::ExistingFile);
  region->add_option("--polygons", inf.polygons, "Polygon JSON")->check(CLI::ExistingFile);
  region->add_flag("--all", inf.all, "Remove text anywhere in the image");
  region->require_option(1);
  i->add_option("--dilation", inf.dilation, "Compositing disk radius")->check(CLI::NonNegativeNumber);
  i->add_option("--threshold", inf.threshold, "Refined-mask threshold")->check(CLI::Range(0.0, 1.0));
  i->add_option("--intermediates", inf.intermediates, "Directory for intermediate outputs");

  ServeArgs sv;
  auto* v = app.add_subcommand("serve", "Run the HTTP service");
  v->add_option("--checkpoint", sv.checkpoint, "Checkpoint path")->required()->check(CLI::ExistingFile);
  v->add_option("--host", sv.host, "Bind address");
  v->add_option("--port", sv.port, "Port (0 picks one)")->check(CLI::Range(0, 65535));
  v->add_option("--concurrency", sv.concurrency, "Concurrent erase calls")->check(CLI::Range(1, 1024));
  v->add_option("--max-body-bytes", sv.max_body_bytes, "Decoded image size limit")->check(CLI::PositiveNumber);
  v->add_option("--static", sv.static_dir, "Directory served at /")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& pe) {
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << error_line("usage_error", pe.what()) << "\n" << sub->help();
    return kExitUsage;
  }

  try {
    if (*s) return synth_data(synth, out);
    if (*mk) return make_masks(masks, out);
    if (*t) return train(tr, out);
    if (*e) return evaluate(ev, out);
    if (*i) return infer_cmd(inf, out);
    if (*v) return serve(sv, out);
  } catch (const CLI::ValidationError& ve) {
    err << error_line("usage_error", ve.what()) << "\n";
    return kExitUsage;
  } catch (const NumericError& ne) {
    err << error_line("numeric_error", ne.what(), ne.component()) << "\n";
    return kExitFailure;
  } catch (const SchemaError& se) {
    err << error_line("schema_error", se.what()) << "\n";
    return kExitFailure;
  } catch (const IoError& io) {
    err << error_line("io_error", io.what()) << "\n";
    return kExitFailure;
  } catch (const InvalidArgument& ia) {
    err << error_line("invalid_argument", ia.what()) << "\n";
    return kExitFailure;
  } catch (const std::exception& ex) {
    err << error_line("internal_error", ex.what()) << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace mtr::cli
