#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace riskdisc {

/// A project as a bag of named free-text fields. Field order is the order in
/// the source file and is preserved through load and save.
struct ProjectRecord {
  std::string id;
  std::string name;
  std::vector<std::pair<std::string, std::string>> fields;

  bool operator==(const ProjectRecord&) const = default;
};

/// A risk as tracked in one project's risk register.
struct RawRisk {
  std::string risk_id;
  std::string project_id;
  std::string text;

  bool operator==(const RawRisk&) const = default;
};

/// An expert-written canonical risk and its recommended mitigation.
struct CuratedRisk {
  std::string curated_id;
  std::string risk_text;
  std::string mitigation_text;

  bool operator==(const CuratedRisk&) const = default;
};

/// One (raw risk, curated risk) training pair for fine-tuning.
struct ParallelPair {
  std::string raw_text;
  std::string curated_text;

  bool operator==(const ParallelPair&) const = default;
};

enum class RiskKind { raw, curated };

using RiskCollection = std::variant<std::vector<RawRisk>, std::vector<CuratedRisk>>;

// Loaders read one JSON object per line. Lines holding only whitespace are
// skipped; every other line yields one record or a ParseError naming the
// line. A duplicate id rejects the whole load.
std::vector<ProjectRecord> load_projects(const std::filesystem::path& path);
std::vector<ProjectRecord> load_projects(std::istream& in, std::string_view source);

RiskCollection load_risks(const std::filesystem::path& path, RiskKind kind);
std::vector<RawRisk> load_raw_risks(const std::filesystem::path& path);
std::vector<RawRisk> load_raw_risks(std::istream& in, std::string_view source);
std::vector<CuratedRisk> load_curated_risks(const std::filesystem::path& path);
std::vector<CuratedRisk> load_curated_risks(std::istream& in, std::string_view source);

std::vector<ParallelPair> load_parallel_corpus(const std::filesystem::path& path);
std::vector<ParallelPair> load_parallel_corpus(std::istream& in, std::string_view source);

// Serializers emit exactly the schema the loaders accept, one object per line.
std::string to_jsonl(std::span<const ProjectRecord> records);
std::string to_jsonl(std::span<const RawRisk> risks);
std::string to_jsonl(std::span<const CuratedRisk> risks);
std::string to_jsonl(std::span<const ParallelPair> pairs);

/// Name followed by the field values in stored order, empty parts skipped,
/// joined with ". " and normalized. Throws DataError when every field value
/// normalizes to empty.
std::string assemble_text(const ProjectRecord& record);

/// Reads a whole file; throws DataError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace riskdisc
