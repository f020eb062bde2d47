#include "riskdisc/project_similarity.hpp"

#include "riskdisc/encoder.hpp"
#include "riskdisc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace riskdisc {

namespace {

bool ranks_before(const ProjectMatch& a, const ProjectMatch& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

void check_floor(double floor) {
  if (!(floor >= 0.0 && floor <= 1.0)) throw InvalidArgument("floor must lie in [0, 1]");
}

}  // namespace

double arc_cos_sim(const UnitVector& u, const UnitVector& v) {
  const double c = cosine_similarity(u, v);
  return 1.0 - std::acos(c) / std::numbers::pi;
}

ProjectProfile build_profile(const ProjectRecord& record, const EmbeddingTable& table,
                             const StopwordList& stopwords, const ProfileOptions& options) {
  const std::string text = assemble_text(record);
  ProjectProfile profile{record.id, rake_extract(text, stopwords, options.max_phrase_len), {}};

  std::vector<double> blend(table.dim(), 0.0);
  double total_weight = 0.0;
  for (const auto& phrase : profile.phrases) {
    const double w = options.pooling == Pooling::score_weighted ? phrase.score : 1.0;
    std::vector<double> mean(table.dim(), 0.0);
    for (const auto& word : phrase.words) {
      const auto v = embed_word(table, word);
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
    }
    const auto n = static_cast<double>(phrase.words.size());
    for (std::size_t i = 0; i < blend.size(); ++i) blend[i] += w * mean[i] / n;
    total_weight += w;
  }
  if (total_weight > 0.0) {
    for (double& c : blend) c /= total_weight;
    profile.vector = UnitVector::normalize(std::move(blend));
  }

  if (profile.vector.is_sentinel()) {
    // Shares the table without taking ownership.
    const std::shared_ptr<const EmbeddingTable> view(std::shared_ptr<void>(), &table);
    profile.vector = SubwordBaselineEncoder(view, stopwords).encode(text);
  }
  if (profile.vector.is_sentinel()) {
    throw DataError("project \"" + record.id + "\" has no embeddable content");
  }
  return profile;
}

std::vector<ProjectMatch> truncate_ranking(std::span<const ProjectMatch> ranking, std::size_t k,
                                           double floor) {
  check_floor(floor);
  std::vector<ProjectMatch> out;
  for (const auto& m : ranking) {
    if (out.size() >= k) break;
    if (m.score < floor) break;
    out.push_back(m);
  }
  return out;
}

std::vector<ProjectMatch> top_k_similar(std::string_view id,
                                        std::span<const ProjectProfile> profiles, std::size_t k,
                                        double floor) {
  check_floor(floor);
  const auto query = std::find_if(profiles.begin(), profiles.end(),
                                  [&](const ProjectProfile& p) { return p.id == id; });
  if (query == profiles.end()) throw NotFound("unknown project \"" + std::string(id) + "\"");

  std::vector<ProjectMatch> all;
  for (const auto& p : profiles) {
    if (p.id == id) continue;
    const double s = arc_cos_sim(query->vector, p.vector);
    if (s >= floor) all.push_back({p.id, s});
  }
  std::sort(all.begin(), all.end(), ranks_before);
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<std::vector<ProjectMatch>> rank_all(std::span<const ProjectProfile> profiles) {
  const std::size_t n = profiles.size();
  std::vector<std::vector<ProjectMatch>> rankings(n);
  for (auto& r : rankings) r.reserve(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = arc_cos_sim(profiles[i].vector, profiles[j].vector);
      rankings[i].push_back({profiles[j].id, s});
      rankings[j].push_back({profiles[i].id, s});
    }
  }
  for (auto& r : rankings) std::sort(r.begin(), r.end(), ranks_before);
  return rankings;
}

}  // namespace riskdisc
