#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <fstream>
#include <future>
#include <random>
#include <thread>

#include "mtr/core/error.hpp"
#include "mtr/io/annotations.hpp"
#include "mtr/io/png.hpp"
#include "mtr/service/service.hpp"
#include "temp_dir.hpp"

using namespace mtr;
using namespace mtr::service;
using nlohmann::json;

namespace {

class StubModel : public InpaintingModel {
 public:
  ModelOutputs run(const ImageTensor& input, const MaskTensor&) const override {
    const int now = ++in_flight;
    int seen = max_in_flight.load();
    while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
    }
    if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    --in_flight;
    if (fail) throw std::runtime_error("secret internal detail");
    ModelOutputs o;
    o.fine = input;
    for (auto& v : o.fine.data()) v = 1.0f - v;
    o.coarse = o.coarse_composite = o.fine_composite = o.fine;
    o.refined_mask = MaskTensor::ones(input.height(), input.width());
    return o;
  }
  int spatial_multiple() const override { return 4; }
  std::string id() const override { return "stub-0001"; }
  std::int64_t step() const override { return 42; }

  int delay_ms = 0;
  bool fail = false;
  mutable std::atomic<int> in_flight{0};
  mutable std::atomic<int> max_in_flight{0};
};

std::string png_b64(int h, int w, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  ImageTensor img(h, w, 3);
  for (auto& v : img.data()) v = byte(rng) / 255.0f;
  return io::base64_encode(io::encode_png(img));
}

std::string mask_b64(int h, int w) {
  MaskTensor m(h, w);
  for (int x = 0; x < w / 2; ++x) m.at(0, x) = 1.0f;
  return io::base64_encode(io::encode_png(m));
}

ImageTensor decode_image(const json& v) { return io::decode_png_rgb(io::base64_decode(v.get<std::string>())); }

struct Fixture {
  explicit Fixture(ServiceOptions options = {}) : model(std::make_shared<StubModel>()) {
    auto m = model;
    svc = std::make_unique<Service>(options, [m] { return m; });
    svc->load_now();
  }
  std::shared_ptr<StubModel> model;
  std::unique_ptr<Service> svc;
};

void check_error(const Response& r, int status) {
  CHECK(r.status == status);
  CHECK(r.body.contains("error"));
  CHECK(r.body.contains("detail"));
}

}  // namespace

TEST_CASE("health reports loading, then ok with a stable id") {
  std::promise<void> gate;
  auto opened = gate.get_future().share();
  auto model = std::make_shared<StubModel>();
  Service svc({}, [opened, model] {
    opened.wait();
    return model;
  });
  svc.start_loading();
  const auto loading = svc.health();
  check_error(loading, 503);
  CHECK(loading.body["status"] == "loading");
  check_error(svc.erase(json{{"image", png_b64(4, 4)}, {"all", true}}.dump()), 503);
  gate.set_value();
  for (int i = 0; i < 500 && !svc.loaded(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(2));
  const auto a = svc.health();
  const auto b = svc.health();
  CHECK(a.status == 200);
  CHECK(a.body["status"] == "ok");
  CHECK(a.body["checkpoint_id"] == "stub-0001");
  CHECK(a.body["checkpoint_id"] == b.body["checkpoint_id"]);
  CHECK(b.body["uptime_s"].get<double>() >= a.body["uptime_s"].get<double>());
}

TEST_CASE("failed load keeps health at 503 with the cause") {
  Service svc({}, []() -> std::shared_ptr<const InpaintingModel> { throw IoError("no such checkpoint"); });
  svc.load_now();
  const auto h = svc.health();
  check_error(h, 503);
  CHECK(h.body["detail"].get<std::string>().find("no such checkpoint") != std::string::npos);
}

TEST_CASE("erase happy paths") {
  Fixture f;
  SUBCASE("all") {
    const auto r = f.svc->erase(json{{"image", png_b64(10, 7)}, {"all", true}}.dump());
    REQUIRE(r.status == 200);
    const auto out = decode_image(r.body["composite_fine"]);
    CHECK(out.height() == 10);
    CHECK(out.width() == 7);
    CHECK(r.body["model_info"]["checkpoint_id"] == "stub-0001");
    CHECK(r.body["model_info"]["step"] == 42);
    CHECK(r.body["timing_ms"].get<double>() >= 0.0);
    CHECK_FALSE(r.body.contains("intermediates"));
  }
  SUBCASE("intermediates match the input size") {
    const auto r = f.svc->erase(
        json{{"image", png_b64(9, 13)}, {"all", true}, {"options", {{"return_intermediates", true}}}}.dump());
    REQUIRE(r.status == 200);
    const auto rm = io::decode_png_gray(io::base64_decode(r.body["intermediates"]["refined_mask"].get<std::string>()));
    CHECK(rm.height() == 9);
    CHECK(rm.width() == 13);
    for (const char* k : {"coarse", "coarse_composite", "fine"}) {
      CHECK(rm.same_extent(decode_image(r.body["intermediates"][k])));
    }
  }
  SUBCASE("polygons and mask") {
    const auto poly = f.svc->erase(
        json{{"image", png_b64(8, 8)}, {"polygons", {{{0, 0}, {3, 0}, {3, 3}, {0, 3}}}},
             {"options", {{"dilation_radius", 0}, {"mask_threshold", 0.5}}}}
            .dump());
    REQUIRE(poly.status == 200);
    const auto in = io::decode_png_rgb(io::base64_decode(png_b64(8, 8)));
    const auto out = decode_image(poly.body["composite_fine"]);
    CHECK(out.at(7, 7, 0) == in.at(7, 7, 0));
    CHECK(out.at(1, 1, 0) == doctest::Approx(1.0f - in.at(1, 1, 0)).epsilon(1e-6));
    const auto masked = f.svc->erase(json{{"image", png_b64(8, 8)}, {"mask", mask_b64(8, 8)}}.dump());
    CHECK(masked.status == 200);
    const auto none = f.svc->erase(json{{"image", png_b64(8, 8)}, {"polygons", json::array()}}.dump());
    REQUIRE(none.status == 200);
    CHECK(decode_image(none.body["composite_fine"]) == in);
  }
}

TEST_CASE("schema violations are 400 with a field-level message") {
  Fixture f;
  const auto img = png_b64(8, 8);
  auto detail = [&](const json& body) {
    const auto r = f.svc->erase(body.dump());
    check_error(r, 400);
    return r.body["detail"].get<std::string>();
  };
  const auto both = detail({{"image", img}, {"polygons", json::array()}, {"mask", mask_b64(8, 8)}});
  CHECK(both.find("polygons") != std::string::npos);
  CHECK(both.find("mask") != std::string::npos);
  CHECK(detail({{"image", img}}).find("required") != std::string::npos);
  CHECK(detail({{"image", img}, {"all", false}}).find("required") != std::string::npos);
  CHECK(detail({{"image", img}, {"all", "yes"}}).find("'all'") != std::string::npos);
  CHECK(detail({{"all", true}}).find("'image'") != std::string::npos);
  CHECK(detail({{"image", 5}, {"all", true}}).find("'image'") != std::string::npos);
  CHECK(detail({{"image", img}, {"all", true}, {"extra", 1}}).find("'extra'") != std::string::npos);
  CHECK(detail({{"image", img}, {"all", true}, {"options", {{"dilation_radius", -1}}}}).find("dilation_radius") !=
        std::string::npos);
  CHECK(detail({{"image", img}, {"all", true}, {"options", {{"mask_threshold", 2}}}}).find("mask_threshold") !=
        std::string::npos);
  CHECK(detail({{"image", img}, {"all", true}, {"options", {{"speed", 1}}}}).find("speed") != std::string::npos);
  CHECK(detail({{"image", img}, {"polygons", {{{0, 0}, {1, 1}}}}}).find("polygons") != std::string::npos);
  CHECK(detail({{"image", img}, {"mask", mask_b64(4, 8)}}).find("mask") != std::string::npos);
  check_error(f.svc->erase("{not json"), 400);
  check_error(f.svc->erase("[1,2]"), 400);
}

TEST_CASE("undecodable and oversize payloads") {
  ServiceOptions small;
  small.max_body_bytes = 2000;
  Fixture f(small);
  check_error(f.svc->erase(json{{"image", "!!!not base64"}, {"all", true}}.dump()), 422);
  check_error(f.svc->erase(json{{"image", io::base64_encode(std::vector<std::uint8_t>{1, 2, 3, 4})}, {"all", true}}.dump()), 422);
  std::vector<std::uint8_t> truncated = io::base64_decode(png_b64(8, 8));
  truncated.resize(40);
  check_error(f.svc->erase(json{{"image", io::base64_encode(truncated)}, {"all", true}}.dump()), 422);
  check_error(f.svc->erase(json{{"image", png_b64(40, 40)}, {"all", true}}.dump()), 413);

  // A tiny PNG that claims a huge canvas is refused before decoding.
  auto liar = io::base64_decode(png_b64(4, 4));
  liar[16] = 0x00;
  liar[17] = 0x01;
  check_error(f.svc->erase(json{{"image", io::base64_encode(liar)}, {"all", true}}.dump()), 413);
}

TEST_CASE("internal failures return an opaque id") {
  Fixture f;
  f.model->fail = true;
  const auto r = f.svc->erase(json{{"image", png_b64(8, 8)}, {"all", true}}.dump());
  check_error(r, 500);
  CHECK(r.body["detail"].get<std::string>().find("secret") == std::string::npos);
  CHECK(r.body["detail"].get<std::string>().find("reference id") != std::string::npos);
}

TEST_CASE("requests beyond the concurrency limit are queued, not rejected") {
  ServiceOptions opt;
  opt.concurrency = 2;
  Fixture f(opt);
  f.model->delay_ms = 30;
  const auto body = json{{"image", png_b64(12, 12, 9)}, {"all", true}}.dump();
  const auto sequential = f.svc->erase(body);
  REQUIRE(sequential.status == 200);
  std::vector<std::future<Response>> futures;
  for (int i = 0; i < 8; ++i) futures.push_back(std::async(std::launch::async, [&] { return f.svc->erase(body); }));
  for (auto& fu : futures) {
    const auto r = fu.get();
    REQUIRE(r.status == 200);
    CHECK(r.body["composite_fine"] == sequential.body["composite_fine"]);
  }
  CHECK(f.model->max_in_flight.load() <= 2);
  CHECK(f.model->max_in_flight.load() >= 1);
}

TEST_CASE("http wiring, static files and json error bodies") {
  test::TempDir dir("static");
  {
    std::ofstream(dir.path() / "index.html") << "<html>editor</html>";
  }
  ServiceOptions opt;
  opt.port = 0;
  opt.static_dir = dir.path();
  opt.max_body_bytes = 4096;
  Fixture f(opt);
  const int port = f.svc->bind();
  REQUIRE(port > 0);
  std::thread server([&] { f.svc->serve(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(10, 0);
  for (int i = 0; i < 200; ++i) {
    if (cli.Get("/api/v1/health")) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }

  auto health = cli.Get("/api/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["status"] == "ok");

  auto ok = cli.Post("/api/v1/erase", json{{"image", png_b64(8, 8)}, {"all", true}}.dump(), "application/json");
  REQUIRE(ok);
  CHECK(ok->status == 200);
  CHECK(ok->get_header_value("Content-Type") == "application/json");

  auto conflict = cli.Post("/api/v1/erase", json{{"image", png_b64(8, 8)}, {"all", true}, {"mask", "x"}}.dump(),
                           "application/json");
  REQUIRE(conflict);
  CHECK(conflict->status == 400);

  auto index = cli.Get("/");
  REQUIRE(index);
  CHECK(index->status == 200);
  CHECK(index->body == "<html>editor</html>");

  auto check_json_error = [](const httplib::Result& res) {
    REQUIRE(res);
    CHECK(res->status >= 400);
    const auto body = json::parse(res->body);
    CHECK(body.contains("error"));
    CHECK(body.contains("detail"));
  };
  check_json_error(cli.Get("/api/v1/nothing"));
  check_json_error(cli.Post("/api/v1/erase", std::string(200000, 'x'), "application/json"));
  f.svc->stop();
  server.join();
}
