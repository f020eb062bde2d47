#pragma once

#include "riskdisc/pipeline.hpp"
#include "riskdisc/snapshot.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace riskdisc {

struct ApiRequest {
  std::string method = "GET";
  std::string path;
  std::multimap<std::string, std::string> query;
  std::optional<std::string> api_key;  // value of X-Api-Key
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

inline constexpr const char* kApiKeyHeader = "X-Api-Key";

/// Routes one request against one snapshot. Pure: the same (snapshot,
/// request) always gives the same response.
///   GET /health, GET /snapshot,
///   GET /projects/{id}/similar?k=&floor=, GET /projects/{id}/risks?threshold=
/// Errors use {"error": {"code", "message"}} with 400/401/404/405/500.
ApiResponse handle_api(const Snapshot& snapshot, const ApiRequest& request,
                       std::string_view expected_api_key);

/// Read-only HTTP front end over the newest snapshot in an output
/// directory. A poller picks up a repointed LATEST and swaps the snapshot
/// atomically; each request is answered from exactly one snapshot.
class SnapshotService {
 public:
  /// Throws NotFound when output_dir holds no snapshot and InvalidArgument
  /// when the API key is empty.
  SnapshotService(std::filesystem::path output_dir, ApiConfig api);
  ~SnapshotService();
  SnapshotService(const SnapshotService&) = delete;
  SnapshotService& operator=(const SnapshotService&) = delete;

  /// Binds and serves on background threads. Port 0 picks a free port.
  void start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const;

  /// Reloads when LATEST names a different snapshot; true when swapped.
  bool refresh();
  std::shared_ptr<const Snapshot> current() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace riskdisc
