#include "mtr/train/checkpoint.hpp"

#include "mtr/core/error.hpp"
#include "mtr/io/png.hpp"
#include "mtr/nn/convert.hpp"

namespace mtr::train {

namespace {

template <class Fn>
void for_each_tensor(const torch::nn::Module& module, Fn&& fn) {
  for (const auto& item : module.named_parameters()) fn(item.key(), item.value());
  for (const auto& item : module.named_buffers()) fn(item.key(), item.value());
}

}  // namespace

void append_module(io::Archive& archive, const std::string& prefix, const torch::nn::Module& module) {
  for_each_tensor(module, [&](const std::string& name, const torch::Tensor& t) {
    archive.tensors.push_back(nn::to_record(prefix + "." + name, t));
  });
}

void check_module(const io::Archive& archive, const std::string& prefix,
                  const torch::nn::Module& module) {
  for_each_tensor(module, [&](const std::string& name, const torch::Tensor& t) {
    const std::string full = prefix + "." + name;
    const auto* rec = archive.find(full);
    if (!rec) throw SchemaError("checkpoint is missing tensor '" + full + "'");
    if (!std::equal(rec->shape.begin(), rec->shape.end(), t.sizes().begin(), t.sizes().end())) {
      throw SchemaError("checkpoint tensor '" + full + "' has shape " +
                        c10::str(c10::IntArrayRef(rec->shape)) + ", expected " + c10::str(t.sizes()));
    }
    if (rec->dtype != nn::archive_dtype(t.scalar_type())) throw SchemaError("checkpoint tensor '" + full + "' has the wrong dtype");
  });
}

void restore_module(const io::Archive& archive, const std::string& prefix, torch::nn::Module& module) {
  check_module(archive, prefix, module);
  torch::NoGradGuard no_grad;
  for_each_tensor(module, [&](const std::string& name, const torch::Tensor& t) {
    auto dst = t;
    dst.copy_(nn::from_record(*archive.find(prefix + "." + name)));
  });
}

void check_schema_version(const nlohmann::json& manifest) {
  auto it = manifest.find("schema_version");
  if (it == manifest.end() || !it->is_number_integer()) {
    throw SchemaError("checkpoint manifest has no integer schema_version");
  }
  if (it->get<int>() != kCheckpointSchemaVersion) {
    throw SchemaError("checkpoint schema_version " + std::to_string(it->get<int>()) +
                      " is not supported (expected " + std::to_string(kCheckpointSchemaVersion) + ")");
  }
}

LoadedGenerator load_generator(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  const auto archive = io::parse_archive(bytes);
  check_schema_version(archive.manifest);
  if (!archive.manifest.contains("generator_config")) {
    throw SchemaError("checkpoint manifest has no generator_config");
  }
  LoadedGenerator out;
  out.generator = nn::Generator(nn::generator_config_from_json(archive.manifest["generator_config"]));
  restore_module(archive, "generator", *out.generator);
  out.generator->eval();
  for (auto& p : out.generator->parameters()) p.set_requires_grad(false);
  out.manifest = archive.manifest;
  out.step = archive.manifest.value("step", std::int64_t{0});
  out.checkpoint_id = io::crc32_hex(bytes);
  return out;
}

}  // namespace mtr::train
