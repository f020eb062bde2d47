#include "riskdisc/error.hpp"
#include "riskdisc/snapshot.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <json.hpp>

using namespace riskdisc;
namespace fs = std::filesystem;

namespace {

Snapshot small_snapshot() {
  Snapshot s;
  s.snapshot_id = "abc123";
  s.created_at = "2026-01-02T03:04:05Z";
  s.encoder_id = "test-encoder";
  s.params.recommend = {2, 0.3, 0.6, 0.8};
  s.params.subword = {2, 5, 1000, 9};
  s.params.profile = {3, Pooling::mean};
  s.warnings = {"raw risk R9 refers to unknown project P9"};
  s.project_ids = {"P2", "P1"};
  s.profiles = {{"P2", {{"vendor delay", {"vendor", "delay"}, 4.0}}, UnitVector::normalize({0.6, 0.8})},
                {"P1", {{"scope", {"scope"}, 1.0}}, UnitVector::normalize({1, 0})}};
  s.rankings = {{"P2", {{"P1", 0.7048327646991335}}}, {"P1", {{"P2", 0.7048327646991335}}}};
  s.similar = s.rankings;
  const CuratedRisk k1{"K1", "late vendor", "order early"}, k2{"K2", "vendor is late", "chase"};
  s.reports["P1"] = {"P1", s.similar["P1"], {{k1, 0.9, {"R1", "R2"}}, {k2, 0.65, {"R1"}}}, {}};
  s.reports["P2"] = {"P2", s.similar["P2"], {}, {"curated risk database is empty"}};
  s.matches = {{"R1", "K1", 0.9}, {"R2", "K1", 0.7}, {"R1", "K2", 0.65}};
  s.backlog = {{{"R3", "P2", "unclear"}, 0.2, "K1"}, {{"R4", "P2", "odd"}, std::nullopt, std::nullopt}};
  s.raw_risk_count = 4;
  s.curated_risk_count = 2;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("params json round-trips") {
  const auto s = small_snapshot();
  const auto back = params_from_json(params_to_json(s.params));
  CHECK(back.recommend == s.params.recommend);
  CHECK(back.subword == s.params.subword);
  CHECK(back.profile.max_phrase_len == 3);
  CHECK(back.profile.pooling == Pooling::mean);
}

TEST_CASE("write_snapshot / read_snapshot") {
  testing::TempDir dir;
  const auto s = small_snapshot();
  write_snapshot(s, dir.path());
  for (const char* f : {kSnapshotMetaFile, kProfilesFile, kRankingsFile, kSimilarFile, kReportsFile,
                        kMatchesFile, kBacklogFile}) {
    CHECK(fs::exists(dir / f));
  }
  const auto r = read_snapshot(dir.path());
  CHECK(r.snapshot_id == s.snapshot_id);
  CHECK(r.created_at == s.created_at);
  CHECK(r.encoder_id == s.encoder_id);
  CHECK(r.warnings == s.warnings);
  CHECK(r.project_ids == s.project_ids);
  CHECK(r.rankings == s.rankings);
  CHECK(r.similar == s.similar);
  CHECK(r.reports == s.reports);
  CHECK(r.matches == s.matches);
  REQUIRE(r.backlog.size() == 2);
  CHECK(r.backlog[0].risk == s.backlog[0].risk);
  CHECK(r.backlog[0].best_similarity == s.backlog[0].best_similarity);
  CHECK(r.backlog[0].best_curated_id == s.backlog[0].best_curated_id);
  CHECK_FALSE(r.backlog[1].best_similarity.has_value());
  REQUIRE(r.profiles.size() == 2);
  CHECK(r.profiles[0].phrases[0].words == s.profiles[0].phrases[0].words);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r.profiles[0].vector[i] == doctest::Approx(s.profiles[0].vector[i]).epsilon(1e-15));
  }
  CHECK(r.raw_risk_count == 4);
  CHECK(r.curated_risk_count == 2);

  // Rewriting what was read gives the same report bytes.
  testing::TempDir again;
  write_snapshot(r, again.path());
  CHECK(slurp(again / kReportsFile) == slurp(dir / kReportsFile));
  CHECK(slurp(again / kBacklogFile) == slurp(dir / kBacklogFile));
  CHECK(slurp(again / kSnapshotMetaFile) == slurp(dir / kSnapshotMetaFile));

  const auto meta = nlohmann::json::parse(s.metadata_json());
  CHECK(meta["snapshot_id"] == "abc123");
  CHECK(meta["counts"]["matches"] == 3);
  CHECK(meta["counts"]["projects"] == 2);
}

TEST_CASE("corrupt snapshots are rejected") {
  testing::TempDir dir;
  write_snapshot(small_snapshot(), dir.path());
  SUBCASE("bad json") {
    testing::write_file(dir / kReportsFile, "{oops\n");
    CHECK_THROWS_AS(read_snapshot(dir.path()), DataError);
  }
  SUBCASE("missing report") {
    testing::write_file(dir / kReportsFile, "");
    CHECK_THROWS_AS(read_snapshot(dir.path()), DataError);
  }
}

TEST_CASE("LATEST pointer") {
  testing::TempDir out;
  CHECK_FALSE(latest_snapshot_dir(out.path()).has_value());
  CHECK_THROWS_AS(load_latest_snapshot(out.path()), NotFound);
  fs::create_directories(out / "snapshots" / "abc123");
  write_snapshot(small_snapshot(), out / "snapshots" / "abc123");
  testing::write_file(out / kLatestPointer, "missing\n");
  CHECK_FALSE(latest_snapshot_dir(out.path()).has_value());
  testing::write_file(out / kLatestPointer, "abc123\n");
  REQUIRE(latest_snapshot_dir(out.path()).has_value());
  CHECK(load_latest_snapshot(out.path()).snapshot_id == "abc123");
}

TEST_CASE("filter_report") {
  const auto s = small_snapshot();
  const auto& rep = s.report("P1");
  CHECK(filter_report(s, rep, 0.6) == rep);
  const auto high = filter_report(s, rep, 0.8);
  REQUIRE(high.risks.size() == 1);
  CHECK(high.risks[0].curated.curated_id == "K1");
  CHECK(high.risks[0].sources == std::vector<std::string>{"R1"});
  CHECK(filter_report(s, rep, 1.0).risks.empty());
  CHECK_THROWS_AS(filter_report(s, rep, 0.5), InvalidArgument);
  CHECK_THROWS_AS(filter_report(s, rep, 1.5), InvalidArgument);
  CHECK_THROWS_AS(s.report("P7"), NotFound);
}
