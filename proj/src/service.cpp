#include "ecoperf/service.hpp"

#include <charconv>
#include <set>

#include <httplib.h>
#include <json.hpp>

#include "ecoperf/bench.hpp"
#include "ecoperf/queries.hpp"

namespace ecoperf {

namespace fs = std::filesystem;

struct Service::Server {
  httplib::Server http;
};

namespace {

HttpResponse error_response(int status, std::string_view code, const std::string& message) {
  return {status, nlohmann::json{{"error", code}, {"message", message}}.dump() + "\n"};
}

int status_for(Errc code) {
  switch (code) {
    case Errc::UnknownId:
    case Errc::UnknownNode: return 404;
    case Errc::InvalidArgument:
    case Errc::ParseError: return 400;
    case Errc::ManifestCorrupt:
    case Errc::IoError:
    case Errc::Locked: return 503;
    default: return 500;
  }
}

struct BadQuery : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses the month/top parameters shared by the index and leaderboard routes.
IndexQuery parse_query(const std::multimap<std::string, std::string>& params) {
  IndexQuery q;
  std::set<std::string> seen;
  for (const auto& [key, value] : params) {
    if (!seen.insert(key).second) throw BadQuery("parameter '" + key + "' given twice");
    if (key == "month") {
      try {
        q.month = Month::parse(value);
      } catch (const Error&) {
        throw BadQuery("month must look like YYYY-MM");
      }
    } else if (key == "top") {
      std::size_t n = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec != std::errc() || ptr != value.data() + value.size() || n == 0) {
        throw BadQuery("top must be a positive integer");
      }
      q.top = n;
    } else {
      throw BadQuery("unknown parameter '" + key + "'");
    }
  }
  return q;
}

std::vector<std::string> path_segments(std::string_view path) {
  std::vector<std::string> out;
  for (auto& s : split(path, '/')) {
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)), server_(std::make_unique<Server>()) {
  server_->http.Get(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
    std::multimap<std::string, std::string> params(req.params.begin(), req.params.end());
    const auto out = handle(req.path, params);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  });
}

Service::~Service() { stop(); }

std::shared_ptr<const Service::Snapshot> Service::snapshot() {
  const fs::path manifest = config_.store / "manifest.json";
  std::string text;
  if (fs::exists(manifest)) text = read_text_file(manifest.string());
  {
    std::lock_guard lock(mutex_);
    if (current_ && current_->manifest_text == text) return current_;
  }
  std::unique_lock reopen(reopen_mutex_, std::try_to_lock);
  if (!reopen.owns_lock()) return nullptr;  // another request is swapping the snapshot in
  auto next = std::make_shared<const Snapshot>(Snapshot{text, EventStore::open(config_.store)});
  std::lock_guard lock(mutex_);
  current_ = next;
  return current_;
}

HttpResponse Service::handle(const std::string& path, const std::multimap<std::string, std::string>& query) {
  const auto seg = path_segments(path);
  try {
    if (seg.size() == 1 && seg[0] == "healthz") return {200, R"({"status":"ok"})"};
    if (seg.empty() || seg[0] != "v1") return error_response(404, "NotFound", "no route for " + path);

    if (seg.size() == 2 && seg[1] == "benchmarks") {
      if (!query.empty()) return error_response(400, "BadQuery", "this route takes no parameters");
      return {200, benchmarks_json(Registry(config_.registry))};
    }
    if (seg.size() == 4 && seg[1] == "benchmarks" && seg[3] == "runs") {
      if (!query.empty()) return error_response(400, "BadQuery", "this route takes no parameters");
      return {200, runs_json(Registry(config_.registry), seg[2])};
    }
    if (seg.size() == 3 && (seg[1] == "leaderboard" || seg[1] == "index")) {
      IndexName index;
      try {
        index = parse_index_name(seg[2]);
      } catch (const Error&) {
        return error_response(404, "UnknownId", "no index named '" + seg[2] + "'");
      }
      IndexQuery q = parse_query(query);
      q.index = index;
      std::shared_ptr<const Snapshot> snap;
      try {
        snap = snapshot();
      } catch (const Error& e) {
        return error_response(503, to_string(e.code()), std::string("store is re-opening: ") + e.what());
      }
      if (!snap) return error_response(503, "Unavailable", "store is re-opening");
      const auto body = seg[1] == "leaderboard" ? leaderboard_query_json(snap->store, config_.weights, q)
                                                : index_query_json(snap->store, config_.weights, q);
      return {200, body};
    }
    return error_response(404, "NotFound", "no route for " + path);
  } catch (const BadQuery& e) {
    return error_response(400, "BadQuery", e.what());
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "Internal", e.what());
  }
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->http.bind_to_any_port(host);
  } else {
    port_ = server_->http.bind_to_port(host, port) ? port : -1;
  }
  return port_;
}

bool Service::serve() { return server_->http.listen_after_bind(); }

bool Service::listen(const std::string& host, int port) { return bind(host, port) > 0 && serve(); }

void Service::stop() {
  if (server_) server_->http.stop();
}

}  // namespace ecoperf
