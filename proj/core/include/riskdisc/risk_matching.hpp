#pragma once

#include "riskdisc/corpus.hpp"
#include "riskdisc/encoder.hpp"
#include "riskdisc/project_similarity.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace riskdisc {

struct RiskMatch {
  std::string raw_risk_id;
  std::string curated_id;
  double similarity = 0.0;  // plain cosine

  bool operator==(const RiskMatch&) const = default;
};

/// A risk that could not take part in matching.
struct EncodingIssue {
  enum class Side { raw, curated };
  Side side;
  std::string id;
  std::string reason;
};

struct MatchResult {
  std::vector<RiskMatch> matches;        // raw order, then curated order
  std::vector<std::string> matched_raw_ids;
  std::vector<EncodingIssue> skipped;    // sentinel encodings and encoder failures
};

/// Every (raw, curated) pair with cosine >= threshold. Texts are normalized
/// before encoding. A raw or curated risk whose encoding is the sentinel or
/// whose encoder call fails is reported in `skipped` and takes no part.
/// Throws InvalidArgument unless threshold lies in [0, 1].
MatchResult match_risks(std::span<const RawRisk> raw, std::span<const CuratedRisk> curated,
                        const TextEncoder& encoder, double threshold);

struct BacklogEntry {
  RawRisk risk;
  std::optional<double> best_similarity;  // empty when nothing was comparable
  std::optional<std::string> best_curated_id;
};

/// Encodable raw risks with no curated risk at or above `threshold`, in raw
/// order, each annotated with its closest curated risk.
std::vector<BacklogEntry> unmatched_backlog(std::span<const RawRisk> raw,
                                            std::span<const CuratedRisk> curated,
                                            const TextEncoder& encoder, double threshold);

/// A curated risk together with the raw risks that matched it.
struct RiskGroup {
  CuratedRisk curated;
  double best_similarity = 0.0;
  std::vector<std::string> sources;  // by similarity descending, then id ascending

  bool operator==(const RiskGroup&) const = default;
};

/// Groups matches by curated risk, sorted by best similarity descending
/// then curated_id ascending.
std::vector<RiskGroup> group_matches(std::span<const RiskMatch> matches,
                                     std::span<const CuratedRisk> curated);

/// Greedy highest-first scan: a group survives iff the cosine between its
/// risk text and every already surviving group's risk text is below
/// `dedup_threshold`. Groups are (re)sorted first.
std::vector<RiskGroup> dedup_matches(std::vector<RiskGroup> groups, const TextEncoder& encoder,
                                     double dedup_threshold);

struct RecommendParams {
  std::size_t k = 10;
  double floor = 0.3;
  double threshold = 0.7;
  double dedup_threshold = 0.7;

  /// Throws InvalidArgument when floor or a threshold leaves [0, 1].
  void validate() const;
  bool operator==(const RecommendParams&) const = default;
};

struct RecommendationReport {
  std::string project_id;
  std::vector<ProjectMatch> similar_projects;
  std::vector<RiskGroup> risks;
  std::vector<std::string> warnings;

  bool operator==(const RecommendationReport&) const = default;
};

inline constexpr std::string_view kWarningNoCuratedRisks = "curated risk database is empty";

/// top_k_similar -> raw risks of those projects -> match_risks ->
/// group_matches -> dedup_matches. Throws NotFound for an unknown project.
RecommendationReport recommend(std::string_view project_id,
                               std::span<const ProjectProfile> profiles,
                               std::span<const RawRisk> raw, std::span<const CuratedRisk> curated,
                               const TextEncoder& encoder, const RecommendParams& params);

/// Same, starting from an already computed similar-project list.
RecommendationReport recommend_from_similar(std::string_view project_id,
                                            std::vector<ProjectMatch> similar,
                                            std::span<const RawRisk> raw,
                                            std::span<const CuratedRisk> curated,
                                            const TextEncoder& encoder,
                                            const RecommendParams& params);

// Persisted shapes, one JSON object per call (no trailing newline).
std::string report_to_json(const RecommendationReport& report);
RecommendationReport report_from_json(std::string_view json);
std::string backlog_entry_to_json(const BacklogEntry& entry);
std::string similar_to_json(std::string_view id, std::span<const ProjectMatch> similar);

}  // namespace riskdisc
