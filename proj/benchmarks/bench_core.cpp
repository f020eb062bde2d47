#include <riskdisc/embedding.hpp>
#include <riskdisc/encoder.hpp>
#include <riskdisc/keyphrase.hpp>
#include <riskdisc/project_similarity.hpp>
#include <riskdisc/risk_matching.hpp>
#include <riskdisc/text.hpp>

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

using namespace riskdisc;

namespace {

const std::vector<std::string> kWords = {
    "data",  "pipeline", "migration", "vendor", "delay",  "hardware", "test",     "environment",
    "cloud", "security", "access",    "skills", "scope",  "creep",    "ab-initio", "etl",
    "magento", "drupal", "telecom",   "legacy", "schema", "mapping",  "approval", "budget"};

std::string random_text(std::mt19937_64& rng, int words) {
  std::uniform_int_distribution<std::size_t> pick(0, kWords.size() - 1);
  std::uniform_int_distribution<int> stop(0, 5);
  std::string text;
  for (int i = 0; i < words; ++i) {
    if (!text.empty()) text += ' ';
    text += stop(rng) == 0 ? "the" : kWords[pick(rng)];
    if (stop(rng) == 0) text += ',';
  }
  return text;
}

UnitVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0, 1);
  std::vector<double> v(dim);
  for (auto& c : v) c = n(rng);
  return UnitVector::normalize(std::move(v));
}

void BM_RakeExtract(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto text = normalize_text(random_text(rng, static_cast<int>(state.range(0))));
  const auto& stop = StopwordList::english();
  for (auto _ : state) benchmark::DoNotOptimize(rake_extract(text, stop, 4));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RakeExtract)->Arg(50)->Arg(500)->Arg(5000);

void BM_EmbedWordOov(benchmark::State& state) {
  const EmbeddingTable table(static_cast<std::size_t>(state.range(0)), {}, SubwordParams{});
  for (auto _ : state) benchmark::DoNotOptimize(embed_word(table, "magentoo"));
}
BENCHMARK(BM_EmbedWordOov)->Arg(16)->Arg(100)->Arg(300);

void BM_RankAll(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<ProjectProfile> profiles;
  for (int i = 0; i < state.range(0); ++i) {
    profiles.push_back({"P" + std::to_string(i), {}, random_unit(rng, 100)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(rank_all(profiles));
}
BENCHMARK(BM_RankAll)->Arg(10)->Arg(100)->Arg(500);

// Subword baseline over an empty vocabulary: every word goes through buckets.
class VectorEncoder final : public TextEncoder {
 public:
  explicit VectorEncoder(std::size_t dim)
      : table_(std::make_shared<const EmbeddingTable>(
            dim, std::unordered_map<std::string, std::vector<double>>{}, SubwordParams{})),
        base_(table_) {}
  UnitVector encode(std::string_view text) const override { return base_.encode(text); }
  std::size_t dim() const override { return base_.dim(); }
  std::string id() const override { return "bench"; }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  SubwordBaselineEncoder base_;
};

void BM_MatchRisks(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto n = state.range(0);
  std::vector<RawRisk> raw;
  std::vector<CuratedRisk> curated;
  for (int i = 0; i < n; ++i) {
    raw.push_back({"R" + std::to_string(i), "P1", random_text(rng, 8)});
    curated.push_back({"C" + std::to_string(i), random_text(rng, 8), "mitigate"});
  }
  const CachingEncoder encoder(std::make_shared<const VectorEncoder>(100));
  match_risks(raw, curated, encoder, 0.7);  // fill the cache; time the matching only
  for (auto _ : state) benchmark::DoNotOptimize(match_risks(raw, curated, encoder, 0.7));
  state.SetComplexityN(n);
}
BENCHMARK(BM_MatchRisks)->Arg(10)->Arg(50)->Arg(200)->Complexity();

}  // namespace

BENCHMARK_MAIN();
