#include "riskdisc/error.hpp"
#include "riskdisc/risk_matching.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>
#include <set>

using namespace riskdisc;
using testing::MapEncoder;


TEST_CASE("match_risks examples") {
  MapEncoder enc(2);
  enc.set("late hardware", UnitVector::normalize({1, 0}));
  enc.set("hardware is late", UnitVector::normalize({1, 0}));
  enc.set("skills gap", UnitVector::normalize({0.6, 0.8}));
  const std::vector<RawRisk> raw{{"R1", "P1", "Late Hardware"}};
  const std::vector<CuratedRisk> cur{{"C1", "late hardware", "m"}, {"C2", "skills gap", "m"}};

  const auto r = match_risks(raw, cur, enc, 0.7);
  REQUIRE(r.matches.size() == 1);
  CHECK(r.matches[0] == RiskMatch{"R1", "C1", 1.0});
  CHECK(r.matched_raw_ids == std::vector<std::string>{"R1"});

  CHECK(match_risks(raw, cur, enc, 1.0).matches.size() == 1);
  CHECK(match_risks(raw, cur, enc, 0.6).matches.size() == 2);
  CHECK_THROWS_AS(match_risks(raw, cur, enc, 1.0 + 1e-9), InvalidArgument);
  CHECK_THROWS_AS(match_risks(raw, cur, enc, -0.01), InvalidArgument);

  CHECK(unmatched_backlog(raw, cur, enc, 0.7).empty());
  const auto all = unmatched_backlog(raw, {}, enc, 0.7);
  REQUIRE(all.size() == 1);
  CHECK(all[0].risk == raw[0]);
  CHECK_FALSE(all[0].best_similarity.has_value());
  CHECK(backlog_entry_to_json(all[0]) ==
        R"({"risk_id":"R1","project_id":"P1","text":"Late Hardware","best_similarity":null,"best_curated_id":null})");
}

TEST_CASE("encoder failures are reported per risk") {
  MapEncoder enc(2);
  enc.set("a", UnitVector::normalize({1, 0}));
  enc.set("empty", UnitVector::sentinel(2));
  const std::vector<RawRisk> raw{{"R1", "P", "a"}, {"R2", "P", "missing"}, {"R3", "P", "empty"}};
  const std::vector<CuratedRisk> cur{{"C1", "a", ""}, {"C2", "gone", ""}};
  const auto r = match_risks(raw, cur, enc, 0.5);
  CHECK(r.matches.size() == 1);
  REQUIRE(r.skipped.size() == 3);
  CHECK(r.skipped[0].id == "R2");
  CHECK(r.skipped[1].id == "R3");
  CHECK(r.skipped[2].id == "C2");
  CHECK(r.skipped[2].side == EncodingIssue::Side::curated);
  CHECK(unmatched_backlog(raw, cur, enc, 0.5).empty());
}

TEST_CASE("match, backlog and dedup agree with exhaustive oracles") {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    CAPTURE(trial);
    const auto in = oracle::random_match_instance(rng);
    for (const auto& v : oracle::match_violations(in)) FAIL_CHECK(v);
  }
}

TEST_CASE("dedup_matches fixtures") {
  MapEncoder enc(3);
  enc.set("a", UnitVector::normalize({1, 0, 0}));
  enc.set("a2", UnitVector::normalize({1, 0.1, 0}));
  enc.set("b", UnitVector::normalize({0, 1, 0}));
  const CuratedRisk c1{"C1", "a", ""}, c2{"C2", "a2", ""}, c3{"C3", "b", ""}, c0{"C0", "a", ""};

  SUBCASE("three items: near-duplicate dropped") {
    const auto kept = dedup_matches({{c1, 0.95, {"R1"}}, {c2, 0.9, {"R2"}}, {c3, 0.8, {"R3"}}}, enc, 0.7);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].curated.curated_id == "C1");
    CHECK(kept[1].curated.curated_id == "C3");
  }
  SUBCASE("identical text keeps the higher score, then the lower id") {
    auto kept = dedup_matches({{c1, 0.8, {}}, {c0, 0.9, {}}}, enc, 0.7);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].curated.curated_id == "C0");
    kept = dedup_matches({{c1, 0.9, {}}, {c0, 0.9, {}}}, enc, 0.7);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].curated.curated_id == "C0");
  }
  SUBCASE("nothing above threshold leaves the input unchanged") {
    const std::vector<RiskGroup> in{{c1, 0.9, {"R1"}}, {c3, 0.8, {"R2"}}};
    CHECK(dedup_matches(in, enc, 0.7) == in);
  }
}

TEST_CASE("group_matches collects sources") {
  const std::vector<CuratedRisk> cur{{"C1", "x", "m1"}, {"C2", "y", "m2"}};
  const std::vector<RiskMatch> m{{"R2", "C1", 0.8}, {"R1", "C1", 0.9}, {"R3", "C2", 0.9}, {"R0", "C1", 0.8}};
  const auto g = group_matches(m, cur);
  REQUIRE(g.size() == 2);
  CHECK(g[0].curated.curated_id == "C1");
  CHECK(g[0].best_similarity == 0.9);
  CHECK(g[0].sources == std::vector<std::string>{"R1", "R0", "R2"});
  CHECK(g[1].curated.curated_id == "C2");
  CHECK_THROWS_AS(group_matches(m, std::vector<CuratedRisk>{cur[1]}), InvalidArgument);
}

TEST_CASE("recommend") {
  MapEncoder enc(2);
  enc.set("hardware late", UnitVector::normalize({1, 0}));
  enc.set("scope creep", UnitVector::normalize({0, 1}));
  const std::vector<ProjectProfile> profiles{{"A", {}, UnitVector::normalize({1, 0})},
                                             {"B", {}, UnitVector::normalize({1, 0.2})},
                                             {"C", {}, UnitVector::normalize({-1, 0})}};
  const std::vector<RawRisk> raw{{"R1", "B", "Hardware late"}, {"R2", "C", "scope creep"}};
  const std::vector<CuratedRisk> cur{{"K1", "hardware late", "order early"},
                                     {"K2", "scope creep", "change control"}};
  const RecommendParams params{10, 0.8, 0.7, 0.7};

  SUBCASE("one similar project with an exact match") {
    const auto r = recommend("A", profiles, raw, cur, enc, params);
    REQUIRE(r.similar_projects.size() == 1);
    CHECK(r.similar_projects[0].id == "B");
    REQUIRE(r.risks.size() == 1);
    CHECK(r.risks[0].curated.curated_id == "K1");
    CHECK(r.risks[0].best_similarity == 1.0);
    CHECK(r.risks[0].sources == std::vector<std::string>{"R1"});
    CHECK(r.warnings.empty());
    CHECK(report_from_json(report_to_json(r)) == r);
  }
  SUBCASE("no similar project above the floor") {
    const auto r = recommend("C", profiles, raw, cur, enc, params);
    CHECK(r.similar_projects.empty());
    CHECK(r.risks.empty());
  }
  SUBCASE("empty curated database warns") {
    const auto r = recommend("A", profiles, raw, {}, enc, params);
    CHECK(r.risks.empty());
    CHECK(r.warnings == std::vector<std::string>{std::string(kWarningNoCuratedRisks)});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(recommend("Z", profiles, raw, cur, enc, params), NotFound);
    CHECK_THROWS_AS(recommend("A", profiles, raw, cur, enc, RecommendParams{10, 0.3, 1.2, 0.7}),
                    InvalidArgument);
  }
  SUBCASE("report json shape") {
    const auto r = recommend("A", profiles, raw, cur, enc, params);
    const auto j = nlohmann::json::parse(report_to_json(r));
    CHECK(j["project_id"] == "A");
    CHECK(j["similar"][0]["id"] == "B");
    CHECK(j["risks"][0]["curated_id"] == "K1");
    CHECK(j["risks"][0]["risk"] == "hardware late");
    CHECK(j["risks"][0]["mitigation"] == "order early");
    CHECK(j["risks"][0]["similarity"] == 1.0);
    CHECK(j["risks"][0]["sources"] == nlohmann::json::array({"R1"}));
    CHECK_THROWS_AS(report_from_json("{\"project_id\": 3}"), DataError);
  }
}
