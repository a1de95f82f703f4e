#include "mtr/service/service.hpp"

#include <httplib.h>

#include <cstdio>
#include <iostream>
#include <algorithm>
#include <random>
#include <set>

#include "mtr/core/error.hpp"
#include "mtr/infer/erase.hpp"
#include "mtr/io/annotations.hpp"
#include "mtr/io/png.hpp"

namespace mtr::service {

namespace {

struct WireError {
  int status;
  std::string error;
  std::string detail;
};

[[noreturn]] void bad_request(const std::string& detail) { throw WireError{400, "invalid_request", detail}; }

std::string opaque_id() {
  std::random_device rd;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08x%08x", rd(), rd());
  return buf;
}

std::string encode(const ImageTensor& image) {
  const auto png = io::encode_png(image);
  return io::base64_encode(png);
}

std::string encode(const MaskTensor& mask) {
  const auto png = io::encode_png(mask);
  return io::base64_encode(png);
}

/// Width and height from the PNG IHDR chunk, without decoding.
std::optional<std::pair<std::uint32_t, std::uint32_t>> png_extent(const std::vector<std::uint8_t>& b) {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (b.size() < 24 || !std::equal(sig, sig + 8, b.begin())) return std::nullopt;
  auto be32 = [&](std::size_t i) {
    return (std::uint32_t{b[i]} << 24) | (std::uint32_t{b[i + 1]} << 16) | (std::uint32_t{b[i + 2]} << 8) |
           std::uint32_t{b[i + 3]};
  };
  return std::pair{be32(16), be32(20)};
}

std::vector<std::uint8_t> decode_payload(const nlohmann::json& value, const char* field, std::size_t limit) {
  if (!value.is_string()) bad_request(std::string("field '") + field + "' must be a base64 string");
  const auto& text = value.get_ref<const std::string&>();
  if (text.size() / 4 * 3 > limit + 3) {
    throw WireError{413, "payload_too_large",
                    std::string("field '") + field + "' exceeds " + std::to_string(limit) + " bytes"};
  }
  std::vector<std::uint8_t> bytes;
  try {
    bytes = io::base64_decode(text);
  } catch (const InvalidArgument&) {
    throw WireError{422, "undecodable_image", std::string("field '") + field + "' is not valid base64"};
  }
  if (bytes.size() > limit) {
    throw WireError{413, "payload_too_large",
                    std::string("field '") + field + "' exceeds " + std::to_string(limit) + " bytes"};
  }
  const auto extent = png_extent(bytes);
  if (!extent) throw WireError{422, "undecodable_image", std::string("field '") + field + "' is not a PNG"};
  if (std::uint64_t{extent->first} * extent->second * 3 > limit) {
    throw WireError{413, "payload_too_large", std::string("field '") + field + "' decodes to more than " +
                                                   std::to_string(limit) + " bytes of pixels"};
  }
  return bytes;
}

infer::EraseOptions parse_options(const nlohmann::json& j) {
  infer::EraseOptions o;
  if (!j.is_object()) bad_request("field 'options' must be an object");
  for (const auto& item : j.items()) {
    const auto& v = item.value();
    if (item.key() == "dilation_radius") {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > 512) {
        bad_request("field 'options.dilation_radius' must be an integer in [0, 512]");
      }
      o.dilation_radius = v.get<int>();
    } else if (item.key() == "mask_threshold") {
      if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0) {
        bad_request("field 'options.mask_threshold' must be a number in [0, 1]");
      }
      o.mask_threshold = v.get<float>();
    } else if (item.key() == "return_intermediates") {
      if (!v.is_boolean()) bad_request("field 'options.return_intermediates' must be a boolean");
      o.return_intermediates = v.get<bool>();
    } else {
      bad_request("unknown field 'options." + item.key() + "'");
    }
  }
  return o;
}

Response to_response(const WireError& e) { return {e.status, error_body(e.error, e.detail)}; }

}  // namespace

nlohmann::json error_body(const std::string& error, const std::string& detail) {
  return {{"error", error}, {"detail", detail}};
}

Service::Service(ServiceOptions options, ModelLoader loader)
    : options_(std::move(options)),
      loader_(std::move(loader)),
      started_(std::chrono::steady_clock::now()),
      slots_(std::clamp(options_.concurrency, 1, 1024)) {
  if (options_.concurrency < 1 || options_.concurrency > 1024) {
    throw InvalidArgument("concurrency must lie in [1, 1024]");
  }
  if (!loader_) throw InvalidArgument("service needs a model loader");
}

Service::~Service() {
  stop();
  if (loader_thread_.joinable()) loader_thread_.join();
}

void Service::load_now() {
  try {
    auto model = loader_();
    if (!model) throw Error("loader returned no model");
    std::lock_guard lock(mutex_);
    model_ = std::move(model);
    load_error_.reset();
  } catch (const std::exception& e) {
    std::lock_guard lock(mutex_);
    load_error_ = e.what();
  }
}

void Service::start_loading() {
  if (loader_thread_.joinable()) loader_thread_.join();
  loader_thread_ = std::thread([this] { load_now(); });
}

bool Service::loaded() const {
  std::lock_guard lock(mutex_);
  return model_ != nullptr;
}

Response Service::health() const {
  std::lock_guard lock(mutex_);
  const double uptime = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  if (!model_) {
    if (load_error_) return {503, error_body("model_unavailable", "checkpoint load failed: " + *load_error_)};
    auto body = error_body("loading", "checkpoint is still loading");
    body["status"] = "loading";
    body["uptime_s"] = uptime;
    return {503, body};
  }
  return {200, {{"status", "ok"}, {"checkpoint_id", model_->id()}, {"uptime_s", uptime}}};
}

Response Service::erase(const std::string& body) const {
  std::shared_ptr<const InpaintingModel> model;
  {
    std::lock_guard lock(mutex_);
    model = model_;
  }
  if (!model) return {503, error_body("loading", "checkpoint is not loaded")};
  try {
    return erase_checked(body, *model);
  } catch (const WireError& e) {
    return to_response(e);
  } catch (const std::exception& e) {
    const auto id = opaque_id();
    std::cerr << "erase failed [" << id << "]: " << e.what() << "\n";
    return {500, error_body("internal_error", "request failed; reference id " + id)};
  }
}

Response Service::erase_checked(const std::string& body, const InpaintingModel& model) const {
  const auto t0 = std::chrono::steady_clock::now();
  if (body.size() > 2 * (options_.max_body_bytes / 3 * 4 + 4) + (1u << 20)) {
    throw WireError{413, "payload_too_large", "request body is " + std::to_string(body.size()) + " bytes"};
  }
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) bad_request("body is not valid JSON");
  if (!doc.is_object()) bad_request("body must be a JSON object");
  for (const auto& item : doc.items()) {
    static const std::set<std::string> known{"image", "polygons", "mask", "all", "options"};
    if (!known.contains(item.key())) bad_request("unknown field '" + item.key() + "'");
  }
  if (!doc.contains("image")) bad_request("missing field 'image'");

  const bool has_polygons = doc.contains("polygons");
  const bool has_mask = doc.contains("mask");
  if (doc.contains("all") && !doc["all"].is_boolean()) bad_request("field 'all' must be a boolean");
  const bool has_all = doc.value("all", false);
  const int chosen = int{has_polygons} + int{has_mask} + int{has_all};
  if (chosen > 1) {
    std::string names;
    for (auto [flag, name] : {std::pair{has_polygons, "polygons"}, {has_mask, "mask"}, {has_all, "all"}}) {
      if (flag) names += (names.empty() ? "" : ", ") + std::string(name);
    }
    bad_request("fields " + names + " are mutually exclusive; give exactly one region");
  }
  if (chosen == 0) bad_request("one of 'polygons', 'mask' or 'all=true' is required");

  infer::EraseRequest req;
  if (doc.contains("options")) req.options = parse_options(doc["options"]);
  const auto image_bytes = decode_payload(doc["image"], "image", options_.max_body_bytes);
  try {
    req.image = io::decode_png_rgb(image_bytes);
  } catch (const Error& e) {
    throw WireError{422, "undecodable_image", std::string("field 'image': ") + e.what()};
  }
  if (has_polygons) {
    try {
      req.region = io::polygons_from_json(doc["polygons"]);
    } catch (const SchemaError& e) {
      bad_request(std::string("field 'polygons': ") + e.what());
    }
  } else if (has_mask) {
    const auto mask_bytes = decode_payload(doc["mask"], "mask", options_.max_body_bytes);
    MaskTensor mask;
    try {
      mask = io::decode_png_gray(mask_bytes);
    } catch (const Error& e) {
      throw WireError{422, "undecodable_image", std::string("field 'mask': ") + e.what()};
    }
    if (!mask.same_extent(req.image)) {
      bad_request("field 'mask' is " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                  " but the image is " + std::to_string(req.image.height()) + "x" +
                  std::to_string(req.image.width()));
    }
    req.region = std::move(mask);
  } else {
    req.region = infer::EraseAll{};
  }

  infer::EraseResult result;
  {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{slots_};
    try {
      result = infer::erase(model, req);
    } catch (const InvalidArgument& e) {
      bad_request(e.what());
    }
  }

  nlohmann::json out;
  out["composite_fine"] = encode(result.composite_fine);
  if (result.intermediates) {
    const auto& im = *result.intermediates;
    out["intermediates"] = {{"refined_mask", encode(im.refined_mask)},
                            {"coarse", encode(im.coarse)},
                            {"coarse_composite", encode(im.coarse_composite)},
                            {"fine", encode(im.fine)}};
  }
  out["model_info"] = {{"checkpoint_id", model.id()}, {"step", model.step()}};
  out["timing_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {200, out};
}

int Service::bind() {
  server_ = std::make_unique<httplib::Server>();
  auto& svr = *server_;
  const std::size_t threads = static_cast<std::size_t>(options_.concurrency) + 8;
  svr.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  svr.set_payload_max_length(2 * (options_.max_body_bytes / 3 * 4 + 4) + (1u << 20));
  auto send = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  svr.Post("/api/v1/erase", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, erase(req.body));
  });
  svr.Get("/api/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, health());
  });
  if (options_.static_dir) {
    if (!svr.set_mount_point("/", options_.static_dir->string())) {
      throw IoError("static directory " + options_.static_dir->string() + " does not exist");
    }
  } else {
    svr.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<!doctype html><title>mtrnet</title><p>POST /api/v1/erase, GET /api/v1/health</p>",
                      "text/html");
    });
  }
  svr.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const std::string reason = httplib::status_message(res.status);
    std::string code = reason;
    for (auto& c : code) c = c == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    res.set_content(error_body(code, reason + ": " + req.method + " " + req.path).dump(), "application/json");
    return httplib::Server::HandlerResponse::Handled;
  });
  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    const auto id = opaque_id();
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      std::cerr << "request failed [" << id << "]: " << e.what() << "\n";
    } catch (...) {
    }
    res.status = 500;
    res.set_content(error_body("internal_error", "request failed; reference id " + id).dump(),
                    "application/json");
  });
  const int port = options_.port == 0 ? svr.bind_to_any_port(options_.host)
                                      : (svr.bind_to_port(options_.host, options_.port) ? options_.port : -1);
  if (port < 0) throw IoError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  return port;
}

void Service::serve() {
  if (!server_) throw Error("serve() called before bind()");
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

}  // namespace mtr::service
