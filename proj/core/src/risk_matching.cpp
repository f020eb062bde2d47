#include "riskdisc/risk_matching.hpp"

#include "riskdisc/error.hpp"
#include "riskdisc/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

namespace riskdisc {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_unit_interval(double value, const char* what) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw InvalidArgument(std::string(what) + " must lie in [0, 1], got " + std::to_string(value));
  }
}

// Encodes `text`, or records why it could not be encoded.
std::optional<UnitVector> try_encode(const TextEncoder& encoder, std::string_view text,
                                     EncodingIssue::Side side, const std::string& id,
                                     std::vector<EncodingIssue>& issues) {
  try {
    auto v = encoder.encode(normalize_text(text));
    if (v.is_sentinel()) {
      issues.push_back({side, id, "nothing to encode"});
      return std::nullopt;
    }
    return v;
  } catch (const DataError& e) {
    issues.push_back({side, id, e.what()});
    return std::nullopt;
  }
}

struct EncodedSet {
  std::vector<std::optional<UnitVector>> raw;
  std::vector<std::optional<UnitVector>> curated;
  std::vector<EncodingIssue> issues;
};

EncodedSet encode_all(std::span<const RawRisk> raw, std::span<const CuratedRisk> curated,
                      const TextEncoder& encoder) {
  EncodedSet s;
  s.raw.reserve(raw.size());
  for (const auto& r : raw) {
    s.raw.push_back(try_encode(encoder, r.text, EncodingIssue::Side::raw, r.risk_id, s.issues));
  }
  s.curated.reserve(curated.size());
  for (const auto& c : curated) {
    s.curated.push_back(
        try_encode(encoder, c.risk_text, EncodingIssue::Side::curated, c.curated_id, s.issues));
  }
  return s;
}

bool group_before(const RiskGroup& a, const RiskGroup& b) {
  if (a.best_similarity != b.best_similarity) return a.best_similarity > b.best_similarity;
  return a.curated.curated_id < b.curated.curated_id;
}

}  // namespace

MatchResult match_risks(std::span<const RawRisk> raw, std::span<const CuratedRisk> curated,
                        const TextEncoder& encoder, double threshold) {
  check_unit_interval(threshold, "match threshold");
  auto enc = encode_all(raw, curated, encoder);
  MatchResult result;
  result.skipped = std::move(enc.issues);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!enc.raw[i]) continue;
    bool any = false;
    for (std::size_t j = 0; j < curated.size(); ++j) {
      if (!enc.curated[j]) continue;
      const double s = cosine_similarity(*enc.raw[i], *enc.curated[j]);
      if (s >= threshold) {
        result.matches.push_back({raw[i].risk_id, curated[j].curated_id, s});
        any = true;
      }
    }
    if (any) result.matched_raw_ids.push_back(raw[i].risk_id);
  }
  return result;
}

std::vector<BacklogEntry> unmatched_backlog(std::span<const RawRisk> raw,
                                            std::span<const CuratedRisk> curated,
                                            const TextEncoder& encoder, double threshold) {
  check_unit_interval(threshold, "match threshold");
  const auto enc = encode_all(raw, curated, encoder);
  std::vector<BacklogEntry> backlog;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!enc.raw[i]) continue;
    BacklogEntry entry{raw[i], std::nullopt, std::nullopt};
    bool matched = false;
    for (std::size_t j = 0; j < curated.size() && !matched; ++j) {
      if (!enc.curated[j]) continue;
      const double s = cosine_similarity(*enc.raw[i], *enc.curated[j]);
      if (s >= threshold) {
        matched = true;
      } else if (!entry.best_similarity || s > *entry.best_similarity) {
        entry.best_similarity = s;
        entry.best_curated_id = curated[j].curated_id;
      }
    }
    if (!matched) backlog.push_back(std::move(entry));
  }
  return backlog;
}

std::vector<RiskGroup> group_matches(std::span<const RiskMatch> matches,
                                     std::span<const CuratedRisk> curated) {
  std::map<std::string, const CuratedRisk*> by_id;
  for (const auto& c : curated) by_id.emplace(c.curated_id, &c);

  std::map<std::string, std::vector<const RiskMatch*>> members;
  for (const auto& m : matches) members[m.curated_id].push_back(&m);

  std::vector<RiskGroup> groups;
  for (auto& [cid, ms] : members) {
    const auto it = by_id.find(cid);
    if (it == by_id.end()) throw InvalidArgument("match refers to unknown curated risk " + cid);
    std::sort(ms.begin(), ms.end(), [](const RiskMatch* a, const RiskMatch* b) {
      if (a->similarity != b->similarity) return a->similarity > b->similarity;
      return a->raw_risk_id < b->raw_risk_id;
    });
    RiskGroup g{*it->second, ms.front()->similarity, {}};
    std::set<std::string> seen;
    for (const auto* m : ms) {
      if (seen.insert(m->raw_risk_id).second) g.sources.push_back(m->raw_risk_id);
    }
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(), group_before);
  return groups;
}

std::vector<RiskGroup> dedup_matches(std::vector<RiskGroup> groups, const TextEncoder& encoder,
                                     double dedup_threshold) {
  check_unit_interval(dedup_threshold, "dedup threshold");
  std::stable_sort(groups.begin(), groups.end(), group_before);
  std::vector<RiskGroup> kept;
  std::vector<UnitVector> kept_vectors;
  for (auto& g : groups) {
    const auto v = encoder.encode(normalize_text(g.curated.risk_text));
    bool duplicate = false;
    if (!v.is_sentinel()) {
      for (const auto& k : kept_vectors) {
        if (cosine_similarity(v, k) >= dedup_threshold) {
          duplicate = true;
          break;
        }
      }
    }
    if (duplicate) continue;
    if (!v.is_sentinel()) kept_vectors.push_back(v);
    kept.push_back(std::move(g));
  }
  return kept;
}

void RecommendParams::validate() const {
  check_unit_interval(floor, "floor");
  check_unit_interval(threshold, "match threshold");
  check_unit_interval(dedup_threshold, "dedup threshold");
}

RecommendationReport recommend_from_similar(std::string_view project_id,
                                            std::vector<ProjectMatch> similar,
                                            std::span<const RawRisk> raw,
                                            std::span<const CuratedRisk> curated,
                                            const TextEncoder& encoder,
                                            const RecommendParams& params) {
  params.validate();
  RecommendationReport report{std::string(project_id), std::move(similar), {}, {}};
  if (curated.empty()) report.warnings.emplace_back(kWarningNoCuratedRisks);

  std::unordered_set<std::string> similar_ids;
  for (const auto& m : report.similar_projects) similar_ids.insert(m.id);
  std::vector<RawRisk> pool;
  for (const auto& r : raw) {
    if (similar_ids.contains(r.project_id)) pool.push_back(r);
  }

  const auto result = match_risks(pool, curated, encoder, params.threshold);
  for (const auto& issue : result.skipped) {
    report.warnings.push_back(
        std::string(issue.side == EncodingIssue::Side::raw ? "raw" : "curated") + " risk " +
        issue.id + " not encoded: " + issue.reason);
  }
  report.risks =
      dedup_matches(group_matches(result.matches, curated), encoder, params.dedup_threshold);
  return report;
}

RecommendationReport recommend(std::string_view project_id,
                               std::span<const ProjectProfile> profiles,
                               std::span<const RawRisk> raw, std::span<const CuratedRisk> curated,
                               const TextEncoder& encoder, const RecommendParams& params) {
  params.validate();
  auto similar = top_k_similar(project_id, profiles, params.k, params.floor);
  return recommend_from_similar(project_id, std::move(similar), raw, curated, encoder, params);
}

namespace {

ordered_json similar_json(std::span<const ProjectMatch> similar) {
  ordered_json arr = ordered_json::array();
  for (const auto& m : similar) arr.push_back({{"id", m.id}, {"score", m.score}});
  return arr;
}

}  // namespace

std::string similar_to_json(std::string_view id, std::span<const ProjectMatch> similar) {
  return ordered_json{{"id", std::string(id)}, {"similar", similar_json(similar)}}.dump();
}

std::string report_to_json(const RecommendationReport& report) {
  ordered_json risks = ordered_json::array();
  for (const auto& g : report.risks) {
    risks.push_back({{"curated_id", g.curated.curated_id},
                     {"risk", g.curated.risk_text},
                     {"mitigation", g.curated.mitigation_text},
                     {"similarity", g.best_similarity},
                     {"sources", g.sources}});
  }
  return ordered_json{{"project_id", report.project_id},
                      {"similar", similar_json(report.similar_projects)},
                      {"risks", std::move(risks)},
                      {"warnings", report.warnings}}
      .dump();
}

RecommendationReport report_from_json(std::string_view json) {
  try {
    const auto obj = ordered_json::parse(json);
    RecommendationReport r;
    r.project_id = obj.at("project_id").get<std::string>();
    for (const auto& m : obj.at("similar")) {
      r.similar_projects.push_back({m.at("id").get<std::string>(), m.at("score").get<double>()});
    }
    for (const auto& g : obj.at("risks")) {
      r.risks.push_back({{g.at("curated_id").get<std::string>(), g.at("risk").get<std::string>(),
                          g.at("mitigation").get<std::string>()},
                         g.at("similarity").get<double>(),
                         g.at("sources").get<std::vector<std::string>>()});
    }
    if (obj.contains("warnings")) r.warnings = obj["warnings"].get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::string backlog_entry_to_json(const BacklogEntry& entry) {
  ordered_json obj{{"risk_id", entry.risk.risk_id},
                   {"project_id", entry.risk.project_id},
                   {"text", entry.risk.text}};
  obj["best_similarity"] = entry.best_similarity ? ordered_json(*entry.best_similarity) : nullptr;
  obj["best_curated_id"] = entry.best_curated_id ? ordered_json(*entry.best_curated_id) : nullptr;
  return obj.dump();
}

}  // namespace riskdisc
