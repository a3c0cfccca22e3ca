#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "ecoperf/event_store.hpp"
#include "ecoperf/weights.hpp"

namespace ecoperf {

struct ServiceConfig {
  std::filesystem::path store;
  std::filesystem::path registry;
  EventWeightConfig weights = EventWeightConfig::defaults();
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Read-only API over an immutable store snapshot. Each request checks the committed manifest
/// and swaps in a fresh snapshot when it changed; readers never see a half-open store.
class Service {
 public:
  explicit Service(ServiceConfig config);

  /// Routes one GET request. Usable without a socket, which is how parity is tested.
  HttpResponse handle(const std::string& path, const std::multimap<std::string, std::string>& query);

  /// Blocks serving on host:port until stop(). A port of 0 picks a free one; see bound_port().
  bool listen(const std::string& host, int port);
  /// Binds without serving; pair with serve() to learn the port first.
  int bind(const std::string& host, int port);
  bool serve();
  void stop();
  int bound_port() const noexcept { return port_; }

  ~Service();

 private:
  struct Snapshot {
    std::string manifest_text;
    EventStore store;
  };
  std::shared_ptr<const Snapshot> snapshot();

  ServiceConfig config_;
  std::mutex mutex_;
  std::mutex reopen_mutex_;
  std::shared_ptr<const Snapshot> current_;
  struct Server;
  std::unique_ptr<Server> server_;
  int port_ = 0;
};

}  // namespace ecoperf
