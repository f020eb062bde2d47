#include "riskdisc/error.hpp"
#include "riskdisc/pipeline.hpp"
#include "riskdisc/service.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <fstream>
#include <set>
#include <thread>

using namespace riskdisc;
namespace fs = std::filesystem;

namespace {

constexpr const char* kKey = "fixture-key";

std::map<std::string, std::string> persisted_lines(const fs::path& file, const char* key) {
  std::map<std::string, std::string> out;
  std::ifstream in(file);
  for (std::string line; std::getline(in, line);) {
    out[nlohmann::json::parse(line).at(key).get<std::string>()] = line;
  }
  return out;
}

ApiRequest get(std::string path, std::multimap<std::string, std::string> query = {}) {
  return {"GET", std::move(path), std::move(query), std::string(kKey)};
}

std::string error_code(const ApiResponse& r) {
  return nlohmann::json::parse(r.body).at("error").at("code").get<std::string>();
}

struct Fixture {
  testing::TempDir dir;
  PipelineConfig config;
  Snapshot snap;
  fs::path snap_dir;
  Fixture() {
    config = PipelineConfig::load(testing::copy_pipeline_fixture(dir.path()));
    snap = run_pipeline(config);
    snap_dir = config.paths.output_dir / "snapshots" / snap.snapshot_id;
    snap = read_snapshot(snap_dir);
  }
};

}  // namespace

TEST_CASE("handle_api") {
  Fixture f;
  const auto& s = f.snap;

  SUBCASE("authentication comes first") {
    auto r = handle_api(s, {"GET", "/health", {}, std::nullopt}, kKey);
    CHECK(r.status == 401);
    CHECK(error_code(r) == "unauthorized");
    r = handle_api(s, {"GET", "/projects/NOPE/risks", {}, std::string("wrong")}, kKey);
    CHECK(r.status == 401);
    r = handle_api(s, {"POST", "/health", {}, std::nullopt}, kKey);
    CHECK(r.status == 401);
  }
  SUBCASE("health and metadata") {
    const auto h = handle_api(s, get("/health"), kKey);
    CHECK(h.status == 200);
    CHECK(h.body == R"({"status":"ok","snapshot_id":")" + s.snapshot_id + "\"}");
    const auto m = handle_api(s, get("/snapshot"), kKey);
    CHECK(m.status == 200);
    std::ifstream meta(f.snap_dir / "snapshot.json");
    std::string line;
    std::getline(meta, line);
    CHECK(m.body == line);
  }
  SUBCASE("similar projects") {
    const auto persisted = persisted_lines(f.snap_dir / "similar.jsonl", "id");
    for (const auto& id : s.project_ids) {
      const auto r = handle_api(s, get("/projects/" + id + "/similar"), kKey);
      CHECK(r.status == 200);
      CHECK(r.body == persisted.at(id));
    }
    const auto r = handle_api(s, get("/projects/P1/similar", {{"k", "5"}, {"floor", "0.5"}}), kKey);
    CHECK(r.status == 200);
    CHECK(r.body == similar_to_json("P1", truncate_ranking(s.rankings.at("P1"), 5, 0.5)));
    const auto zero = handle_api(s, get("/projects/P1/similar", {{"k", "0"}}), kKey);
    CHECK(zero.body == R"({"id":"P1","similar":[]})");
  }
  SUBCASE("risks equal the persisted reports") {
    const auto persisted = persisted_lines(f.snap_dir / "reports.jsonl", "project_id");
    REQUIRE(persisted.size() == 12);
    for (const auto& id : s.project_ids) {
      const auto r = handle_api(s, get("/projects/" + id + "/risks"), kKey);
      CHECK(r.status == 200);
      CHECK(r.body == persisted.at(id));
      CHECK(handle_api(s, get("/projects/" + id + "/risks"), kKey).body == r.body);
    }
    const auto high = handle_api(s, get("/projects/P7/risks", {{"threshold", "0.9"}}), kKey);
    CHECK(high.status == 200);
    CHECK(high.body == report_to_json(filter_report(s, s.report("P7"), 0.9)));
  }
  SUBCASE("errors") {
    auto r = handle_api(s, get("/projects/NOPE/similar"), kKey);
    CHECK(r.status == 404);
    CHECK(error_code(r) == "unknown_project");
    CHECK(nlohmann::json::parse(r.body)["error"]["message"].get<std::string>().find("NOPE") !=
          std::string::npos);
    CHECK(handle_api(s, get("/projects/NOPE/risks"), kKey).status == 404);
    CHECK(error_code(handle_api(s, get("/nowhere"), kKey)) == "not_found");
    CHECK(handle_api(s, get("/projects/P1/other"), kKey).status == 404);
    CHECK(handle_api(s, get("/projects/P1/similar", {{"k", "abc"}}), kKey).status == 400);
    CHECK(handle_api(s, get("/projects/P1/similar", {{"k", "-1"}}), kKey).status == 400);
    CHECK(handle_api(s, get("/projects/P1/similar", {{"floor", "2"}}), kKey).status == 400);
    r = handle_api(s, get("/projects/P1/risks", {{"threshold", "0.1"}}), kKey);
    CHECK(r.status == 400);
    CHECK(error_code(r) == "bad_request");
    CHECK(handle_api(s, get("/projects/P1/risks", {{"threshold", "x"}}), kKey).status == 400);
    CHECK(handle_api(s, {"DELETE", "/health", {}, std::string(kKey)}, kKey).status == 405);
  }
}

TEST_CASE("SnapshotService construction") {
  testing::TempDir empty;
  ApiConfig api;
  api.api_key = kKey;
  CHECK_THROWS_AS(SnapshotService(empty.path(), api), NotFound);
  Fixture f;
  api.api_key.clear();
  CHECK_THROWS_AS(SnapshotService(f.config.paths.output_dir, api), InvalidArgument);
}

TEST_CASE("SnapshotService over HTTP") {
  Fixture f;
  ApiConfig api = f.config.api;
  api.port = 0;
  api.poll_ms = 50;
  SnapshotService service(f.config.paths.output_dir, api);
  service.start();
  REQUIRE(service.port() > 0);
  httplib::Client client("127.0.0.1", service.port());
  const httplib::Headers auth{{kApiKeyHeader, kKey}};

  auto res = client.Get("/health", auth);
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(nlohmann::json::parse(res->body)["snapshot_id"] == f.snap.snapshot_id);

  res = client.Get("/health");
  REQUIRE(res);
  CHECK(res->status == 401);

  res = client.Get("/projects/NOPE/similar", auth);
  REQUIRE(res);
  CHECK(res->status == 404);
  CHECK(nlohmann::json::parse(res->body)["error"]["code"] == "unknown_project");

  const auto persisted = persisted_lines(f.snap_dir / "reports.jsonl", "project_id");
  res = client.Get("/projects/P1/risks", auth);
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == persisted.at("P1"));
  res = client.Get("/projects/P1/similar?k=2&floor=0.4", auth);
  REQUIRE(res);
  CHECK(res->body == similar_to_json("P1", truncate_ranking(f.snap.rankings.at("P1"), 2, 0.4)));

  res = client.Post("/health", auth, "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 405);

  CHECK_FALSE(service.refresh());
  service.stop();
}

TEST_CASE("hot swap keeps every response on one snapshot") {
  Fixture f;
  ApiConfig api = f.config.api;
  api.port = 0;
  api.poll_ms = 20;
  SnapshotService service(f.config.paths.output_dir, api);
  service.start();

  auto next_cfg = f.config;
  next_cfg.params.recommend.threshold = 0.75;
  next_cfg.params.recommend.dedup_threshold = 0.75;

  const auto old_id = f.snap.snapshot_id;
  const auto old_reports = persisted_lines(f.snap_dir / "reports.jsonl", "project_id");

  std::atomic<bool> done{false};
  std::atomic<int> bad{0}, seen_new{0}, total{0};
  std::string new_id;
  std::map<std::string, std::string> new_reports;
  std::mutex new_mu;
  std::vector<std::thread> clients;
  for (int t = 0; t < 3; ++t) {
    clients.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", service.port());
      const httplib::Headers auth{{kApiKeyHeader, kKey}};
      while (!done) {
        // /snapshot carries both the id and the threshold of the snapshot
        // that answered; they must belong together.
        auto r = c.Get("/snapshot", auth);
        if (!r || r->status != 200) {
          ++bad;
          continue;
        }
        const auto j = nlohmann::json::parse(r->body);
        const auto id = j["snapshot_id"].get<std::string>();
        const double thr = j["params"]["threshold"].get<double>();
        if (id == old_id) {
          if (thr != 0.7) ++bad;
        } else {
          if (thr != 0.75) ++bad;
          ++seen_new;
        }
        r = c.Get("/projects/P" + std::to_string(t + 1) + "/risks", auth);
        if (!r || r->status != 200) {
          ++bad;
          continue;
        }
        const auto pid = "P" + std::to_string(t + 1);
        std::lock_guard lock(new_mu);
        if (r->body != old_reports.at(pid) && (new_reports.empty() || r->body != new_reports.at(pid))) ++bad;
        ++total;
      }
    });
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  {
    std::lock_guard lock(new_mu);
    const auto next = run_pipeline(next_cfg);
    new_id = next.snapshot_id;
    new_reports = persisted_lines(next_cfg.paths.output_dir / "snapshots" / new_id / "reports.jsonl", "project_id");
  }
  for (int i = 0; i < 200 && service.current()->snapshot_id != new_id; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  done = true;
  for (auto& c : clients) c.join();
  service.stop();

  CHECK(new_id != old_id);
  CHECK(service.current()->snapshot_id == new_id);
  CHECK(bad == 0);
  CHECK(seen_new > 0);
  CHECK(total > 0);
}
