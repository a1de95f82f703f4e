#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>

#include <json.hpp>

#include "mtr/core/model.hpp"

namespace httplib {
class Server;
}

namespace mtr::service {

inline constexpr std::size_t kDefaultMaxBodyBytes = 16u << 20;

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  /// Erase calls running at once; further requests wait their turn.
  int concurrency = 2;
  /// Limit on the decoded image (and mask) payload.
  std::size_t max_body_bytes = kDefaultMaxBodyBytes;
  std::optional<std::filesystem::path> static_dir;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

using ModelLoader = std::function<std::shared_ptr<const InpaintingModel>()>;

class Service {
 public:
  Service(ServiceOptions options, ModelLoader loader);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Runs the loader on a background thread. Health reports 503 until it returns.
  void start_loading();
  /// Runs the loader on the calling thread.
  void load_now();
  bool loaded() const;

  Response health() const;
  Response erase(const std::string& body) const;

  /// Binds the socket; returns the bound port (useful with port 0).
  int bind();
  /// Serves until stop(); bind() must have succeeded.
  void serve();
  void stop();

 private:
  Response erase_checked(const std::string& body, const InpaintingModel& model) const;

  ServiceOptions options_;
  ModelLoader loader_;
  std::chrono::steady_clock::time_point started_;
  mutable std::mutex mutex_;
  std::shared_ptr<const InpaintingModel> model_;
  std::optional<std::string> load_error_;
  std::thread loader_thread_;
  mutable std::counting_semaphore<1024> slots_;
  std::unique_ptr<httplib::Server> server_;
};

/// Error body {error, detail}.
nlohmann::json error_body(const std::string& error, const std::string& detail);

}  // namespace mtr::service
