#include "riskdisc/error.hpp"
#include "riskdisc/project_similarity.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace riskdisc;

namespace {

EmbeddingTable toy_table() {
  std::istringstream in(
      "5 3\n"
      "deep 1 0 0\n"
      "learning 0 1 0\n"
      "models 0 0 1\n"
      "understanding 1 1 0\n"
      "magento 0.2 0.3 0.9\n");
  return EmbeddingTable::load(in, "toy", {});
}

ProjectProfile profile_of(std::string id, UnitVector v) { return {std::move(id), {}, std::move(v)}; }

double oracle_arc(double c) { return 1.0 - std::acos(c) / std::numbers::pi; }

}  // namespace

TEST_CASE("arc_cos_sim exact values") {
  const auto u = UnitVector::normalize({1, 0});
  CHECK(arc_cos_sim(u, u) == 1.0);
  CHECK(arc_cos_sim(u, UnitVector::normalize({0, 1})) == 0.5);
  CHECK(arc_cos_sim(u, UnitVector::normalize({-1, 0})) == 0.0);
  const auto v = UnitVector::normalize({0.9, std::sqrt(1 - 0.81)});
  CHECK(std::abs(arc_cos_sim(u, v) - 0.8564337068712937) < 1e-12);
  auto at = [&](double c) { return arc_cos_sim(u, UnitVector::normalize({c, std::sqrt(1 - c * c)})); };
  CHECK(at(0.999) - at(0.99) > 0.999 - 0.99);
  CHECK_THROWS_AS(arc_cos_sim(u, UnitVector::sentinel(2)), InvalidArgument);
}

TEST_CASE("arc_cos_sim is symmetric and ranks like cosine") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(2, 24);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto d = dim(rng);
    const auto u = testing::random_unit(rng, d);
    const auto a = testing::random_unit(rng, d);
    const auto b = testing::random_unit(rng, d);
    const double ca = cosine_similarity(u, a), cb = cosine_similarity(u, b);
    const double sa = arc_cos_sim(u, a), sb = arc_cos_sim(u, b);
    CHECK(sa == arc_cos_sim(a, u));
    CHECK((ca > cb) == (sa > sb));
    CHECK((ca < cb) == (sa < sb));
    CHECK(sa >= 0.0);
    CHECK(sa <= 1.0);
  }
}

TEST_CASE("arc-cosine expands differences near 1") {
  CHECK(oracle_arc(0.999) - oracle_arc(0.99) > 0.999 - 0.99);
  const auto u = UnitVector::normalize({1, 0});
  auto at = [&](double c) { return arc_cos_sim(u, UnitVector::normalize({c, std::sqrt(1 - c * c)})); };
  CHECK(at(0.999) - at(0.99) > 0.999 - 0.99);
}

TEST_CASE("build_profile") {
  const auto table = toy_table();
  const StopwordList stop({"require", "the"});

  SUBCASE("one in-vocab word") {
    const auto p = build_profile(ProjectRecord{"P", "", {{"d", "magento"}}}, table, stop);
    CHECK(p.vector == UnitVector::normalize({0.2, 0.3, 0.9}));
  }
  SUBCASE("score-weighted phrase blend") {
    const ProjectRecord r{"P", "", {{"d", "deep learning models require deep understanding"}}};
    const auto p = build_profile(r, table, stop, {5, Pooling::score_weighted});
    REQUIRE(p.phrases.size() == 2);
    CHECK(p.phrases[0].score == 8.5);
    CHECK(p.phrases[1].score == 4.5);
    // mean(deep, learning, models) = (1/3, 1/3, 1/3); mean(deep, understanding) = (1, 1/2, 0)
    const double w1 = 8.5, w2 = 4.5;
    const auto want = UnitVector::normalize({(w1 / 3 + w2 * 1.0) / 13, (w1 / 3 + w2 * 0.5) / 13,
                                             (w1 / 3) / 13});
    for (std::size_t i = 0; i < 3; ++i) CHECK(p.vector[i] == doctest::Approx(want[i]).epsilon(1e-12));

    const auto m = build_profile(r, table, stop, {5, Pooling::mean});
    const auto want_mean = UnitVector::normalize({1.0 / 3 + 1, 1.0 / 3 + 0.5, 1.0 / 3});
    for (std::size_t i = 0; i < 3; ++i) CHECK(m.vector[i] == doctest::Approx(want_mean[i]).epsilon(1e-12));
  }
  SUBCASE("identical text gives identical vectors") {
    const ProjectRecord a{"A", "Shop", {{"d", "magento deep models"}}};
    const ProjectRecord b{"B", "Shop", {{"d", "magento deep models"}}};
    CHECK(build_profile(a, table, stop).vector == build_profile(b, table, stop).vector);
  }
  SUBCASE("stopword-only text is vacuous") {
    CHECK_THROWS_AS(build_profile(ProjectRecord{"P", "", {{"d", "the require"}}}, table, stop),
                    DataError);
  }
}

TEST_CASE("top_k_similar") {
  std::mt19937_64 rng(5);
  std::vector<ProjectProfile> profiles;
  for (const char* id : {"E", "B", "D", "A", "C"}) profiles.push_back(profile_of(id, testing::random_unit(rng, 4)));

  SUBCASE("k = 0") { CHECK(top_k_similar("A", profiles, 0, 0.0).empty()); }
  SUBCASE("two projects") {
    const std::vector<ProjectProfile> two{profiles[0], profiles[1]};
    const auto out = top_k_similar("E", two, 10, 0.0);
    REQUIRE(out.size() == 1);
    CHECK(out[0].id == "B");
    CHECK(out[0].score == arc_cos_sim(profiles[0].vector, profiles[1].vector));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(top_k_similar("Z", profiles, 3, 0.0), NotFound);
    CHECK_THROWS_AS(top_k_similar("A", profiles, 3, 1.5), InvalidArgument);
    CHECK_THROWS_AS(top_k_similar("A", profiles, 3, -0.1), InvalidArgument);
  }
  SUBCASE("brute-force pairwise oracle") {
    const auto ranked = rank_all(profiles);
    for (std::size_t q = 0; q < profiles.size(); ++q) {
      std::vector<ProjectMatch> all;
      for (std::size_t j = 0; j < profiles.size(); ++j) {
        if (j != q) all.push_back({profiles[j].id, oracle_arc(cosine_similarity(profiles[q].vector, profiles[j].vector))});
      }
      std::sort(all.begin(), all.end(), [](const ProjectMatch& a, const ProjectMatch& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
      });
      REQUIRE(ranked[q].size() == all.size());
      for (std::size_t i = 0; i < all.size(); ++i) {
        CHECK(ranked[q][i].id == all[i].id);
        CHECK(ranked[q][i].score == doctest::Approx(all[i].score).epsilon(1e-12));
      }
      for (std::size_t k = 0; k <= 5; ++k) {
        for (double floor : {0.0, 0.3, 0.5, 0.7, 1.0}) {
          std::vector<ProjectMatch> want;
          for (const auto& m : all) {
            if (want.size() < k && m.score >= floor) want.push_back(m);
          }
          const auto got = top_k_similar(profiles[q].id, profiles, k, floor);
          REQUIRE(got.size() == want.size());
          for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].id == want[i].id);
            CHECK(got[i].id != profiles[q].id);
            if (i > 0) CHECK(got[i - 1].score >= got[i].score);
          }
          CHECK(truncate_ranking(ranked[q], k, floor) == got);
        }
      }
    }
  }
  SUBCASE("ties break by id") {
    const auto v = UnitVector::normalize({1, 0});
    std::vector<ProjectProfile> tie{profile_of("Q", v), profile_of("Z", v), profile_of("M", v)};
    const auto out = top_k_similar("Q", tie, 5, 0.0);
    REQUIRE(out.size() == 2);
    CHECK(out[0].id == "M");
    CHECK(out[1].id == "Z");
  }
}
