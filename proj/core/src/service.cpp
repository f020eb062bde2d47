#include "riskdisc/service.hpp"

#include "riskdisc/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace riskdisc {

namespace fs = std::filesystem;

namespace {

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
  return {status,
          nlohmann::ordered_json{{"error", {{"code", code}, {"message", message}}}}.dump()};
}

std::optional<std::string> query_value(const ApiRequest& req, const std::string& key) {
  const auto it = req.query.find(key);
  if (it == req.query.end()) return std::nullopt;
  return it->second;
}

bool parse_double(const std::string& s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_count(const std::string& s, std::size_t& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// "/projects/{id}/{leaf}" -> (id, leaf)
std::optional<std::pair<std::string, std::string>> project_route(std::string_view path) {
  constexpr std::string_view prefix = "/projects/";
  if (!path.starts_with(prefix)) return std::nullopt;
  const auto rest = path.substr(prefix.size());
  const auto slash = rest.rfind('/');
  if (slash == std::string_view::npos || slash == 0) return std::nullopt;
  return std::make_pair(std::string(rest.substr(0, slash)), std::string(rest.substr(slash + 1)));
}

}  // namespace

ApiResponse handle_api(const Snapshot& snapshot, const ApiRequest& req,
                       std::string_view expected_api_key) {
  if (!req.api_key || *req.api_key != expected_api_key) {
    return error_response(401, "unauthorized", "missing or invalid X-Api-Key header");
  }
  if (req.method != "GET") {
    return error_response(405, "method_not_allowed", "the API is read-only; use GET");
  }
  try {
    if (req.path == "/health") {
      return {200, nlohmann::ordered_json{{"status", "ok"}, {"snapshot_id", snapshot.snapshot_id}}.dump()};
    }
    if (req.path == "/snapshot") return {200, snapshot.metadata_json()};

    const auto route = project_route(req.path);
    if (!route) return error_response(404, "not_found", "no route for " + req.path);
    const auto& [id, leaf] = *route;

    if (leaf == "similar") {
      const auto it = snapshot.rankings.find(id);
      if (it == snapshot.rankings.end()) {
        return error_response(404, "unknown_project", "unknown project \"" + id + "\"");
      }
      std::size_t k = snapshot.params.recommend.k;
      double floor = snapshot.params.recommend.floor;
      if (const auto v = query_value(req, "k"); v && !parse_count(*v, k)) {
        return error_response(400, "bad_request", "k must be a non-negative integer");
      }
      if (const auto v = query_value(req, "floor");
          v && (!parse_double(*v, floor) || !(floor >= 0.0 && floor <= 1.0))) {
        return error_response(400, "bad_request", "floor must be a number in [0, 1]");
      }
      return {200, similar_to_json(id, truncate_ranking(it->second, k, floor))};
    }
    if (leaf == "risks") {
      const auto it = snapshot.reports.find(id);
      if (it == snapshot.reports.end()) {
        return error_response(404, "unknown_project", "unknown project \"" + id + "\"");
      }
      const auto v = query_value(req, "threshold");
      if (!v) return {200, report_to_json(it->second)};
      double threshold = 0.0;
      if (!parse_double(*v, threshold)) {
        return error_response(400, "bad_request", "threshold must be a number");
      }
      try {
        return {200, report_to_json(filter_report(snapshot, it->second, threshold))};
      } catch (const InvalidArgument& e) {
        return error_response(400, "bad_request", e.what());
      }
    }
    return error_response(404, "not_found", "no route for " + req.path);
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

struct SnapshotService::Impl {
  fs::path output_dir;
  ApiConfig api;
  httplib::Server server;

  mutable std::mutex snapshot_mu;
  std::shared_ptr<const Snapshot> snapshot;
  fs::path snapshot_dir;

  std::thread listener;
  std::thread poller;
  std::mutex poll_mu;
  std::condition_variable poll_cv;
  bool stopping = false;
  std::mutex stop_mu;
  int bound_port = -1;

  std::shared_ptr<const Snapshot> get() const {
    std::lock_guard lock(snapshot_mu);
    return snapshot;
  }

  void install_routes() {
    auto handler = [this](const httplib::Request& hr, httplib::Response& res) {
      ApiRequest req;
      req.method = hr.method;
      req.path = hr.path;
      for (const auto& [k, v] : hr.params) req.query.emplace(k, v);
      if (hr.has_header(kApiKeyHeader)) req.api_key = hr.get_header_value(kApiKeyHeader);
      const auto snap = get();
      const auto out = handle_api(*snap, req, api.api_key);
      res.status = out.status;
      res.set_content(out.body, "application/json");
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    server.Put(".*", handler);
    server.Delete(".*", handler);
    server.Patch(".*", handler);
  }

  void bind() {
    if (api.port == 0) {
      bound_port = server.bind_to_any_port(api.bind);
    } else {
      bound_port = server.bind_to_port(api.bind, api.port) ? api.port : -1;
    }
    if (bound_port < 0) {
      throw Error("cannot bind " + api.bind + ":" + std::to_string(api.port));
    }
  }

  void poll_loop() {
    std::unique_lock lock(poll_mu);
    while (!stopping) {
      poll_cv.wait_for(lock, std::chrono::milliseconds(api.poll_ms), [this] { return stopping; });
      if (stopping) break;
      lock.unlock();
      try {
        refresh();
      } catch (const std::exception&) {
        // A half-written or corrupt snapshot keeps the current one in service.
      }
      lock.lock();
    }
  }

  bool refresh() {
    const auto dir = latest_snapshot_dir(output_dir);
    if (!dir) return false;
    {
      std::lock_guard lock(snapshot_mu);
      if (*dir == snapshot_dir) return false;
    }
    auto next = std::make_shared<const Snapshot>(read_snapshot(*dir));
    std::lock_guard lock(snapshot_mu);
    snapshot = std::move(next);
    snapshot_dir = *dir;
    return true;
  }
};

SnapshotService::SnapshotService(fs::path output_dir, ApiConfig api) : impl_(std::make_unique<Impl>()) {
  if (api.api_key.empty()) throw InvalidArgument("api.api_key must be set to serve");
  impl_->output_dir = std::move(output_dir);
  impl_->api = std::move(api);
  if (!impl_->refresh()) {
    throw NotFound("no snapshot under " + impl_->output_dir.string() + "; run `index` first");
  }
  impl_->install_routes();
}

SnapshotService::~SnapshotService() { stop(); }

void SnapshotService::start() {
  impl_->bind();
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  if (impl_->api.poll_ms > 0) impl_->poller = std::thread([this] { impl_->poll_loop(); });
}

void SnapshotService::run() {
  impl_->bind();
  if (impl_->api.poll_ms > 0) impl_->poller = std::thread([this] { impl_->poll_loop(); });
  {
    std::lock_guard lock(impl_->poll_mu);
    if (impl_->stopping) return;
  }
  impl_->server.listen_after_bind();
  stop();
}

void SnapshotService::stop() {
  std::lock_guard stop_lock(impl_->stop_mu);
  {
    std::lock_guard lock(impl_->poll_mu);
    impl_->stopping = true;
  }
  impl_->poll_cv.notify_all();
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
  if (impl_->poller.joinable() && impl_->poller.get_id() != std::this_thread::get_id()) {
    impl_->poller.join();
  }
}

int SnapshotService::port() const { return impl_->bound_port; }

bool SnapshotService::refresh() { return impl_->refresh(); }

std::shared_ptr<const Snapshot> SnapshotService::current() const { return impl_->get(); }

}  // namespace riskdisc
