#pragma once

#include "riskdisc/embedding.hpp"
#include "riskdisc/project_similarity.hpp"
#include "riskdisc/risk_matching.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace riskdisc {

struct PipelineParams {
  RecommendParams recommend;
  SubwordParams subword;
  ProfileOptions profile;
};

/// Immutable precomputed result set. Project ids keep input order.
struct Snapshot {
  std::string snapshot_id;
  std::string created_at;
  std::string encoder_id;
  PipelineParams params;
  std::vector<std::string> warnings;

  std::vector<std::string> project_ids;
  std::vector<ProjectProfile> profiles;
  std::map<std::string, std::vector<ProjectMatch>> rankings;  // every other project
  std::map<std::string, std::vector<ProjectMatch>> similar;   // rankings cut at k / floor
  std::map<std::string, RecommendationReport> reports;
  std::vector<RiskMatch> matches;  // all raw x curated pairs at params.threshold
  std::vector<BacklogEntry> backlog;
  std::size_t raw_risk_count = 0;
  std::size_t curated_risk_count = 0;

  const RecommendationReport& report(const std::string& project_id) const;
  std::string metadata_json() const;
};

// File names inside a snapshot directory.
inline constexpr const char* kSnapshotMetaFile = "snapshot.json";
inline constexpr const char* kProfilesFile = "profiles.jsonl";
inline constexpr const char* kRankingsFile = "rankings.jsonl";
inline constexpr const char* kSimilarFile = "similar.jsonl";
inline constexpr const char* kReportsFile = "reports.jsonl";
inline constexpr const char* kMatchesFile = "matches.jsonl";
inline constexpr const char* kBacklogFile = "backlog.jsonl";
inline constexpr const char* kLatestPointer = "LATEST";
inline constexpr const char* kSnapshotsDir = "snapshots";

/// Writes every snapshot file into `dir`, which must exist.
void write_snapshot(const Snapshot& snapshot, const std::filesystem::path& dir);
Snapshot read_snapshot(const std::filesystem::path& dir);

/// Directory of the snapshot named by `output_dir`/LATEST, if any.
std::optional<std::filesystem::path> latest_snapshot_dir(const std::filesystem::path& output_dir);
Snapshot load_latest_snapshot(const std::filesystem::path& output_dir);

/// Risks of a persisted report with similarity >= threshold; sources below
/// the threshold are dropped using the snapshot's match set. Throws
/// InvalidArgument when threshold is below the snapshot's match threshold.
RecommendationReport filter_report(const Snapshot& snapshot, const RecommendationReport& report,
                                   double threshold);

std::string params_to_json(const PipelineParams& params);
PipelineParams params_from_json(std::string_view json);

}  // namespace riskdisc
