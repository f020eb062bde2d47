#pragma once

#include "riskdisc/encoder.hpp"
#include "riskdisc/keyphrase.hpp"
#include "riskdisc/siamese.hpp"
#include "riskdisc/snapshot.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace riskdisc {

struct PipelinePaths {
  std::filesystem::path projects;
  std::filesystem::path raw_risks;
  std::filesystem::path curated_risks;
  std::filesystem::path vectors;
  std::optional<std::filesystem::path> encodings;  // precomputed sentence vectors
  std::optional<std::filesystem::path> stopwords;  // built-in English list when absent
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> parallel_corpus;
  std::optional<std::filesystem::path> sts_benchmark;
};

struct ApiConfig {
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::string api_key;
  int poll_ms = 1000;
};

struct PipelineConfig {
  PipelinePaths paths;
  PipelineParams params;
  ApiConfig api;
  TrainConfig finetune;

  /// Relative paths resolve against the config file's directory.
  static PipelineConfig load(const std::filesystem::path& path);
  static PipelineConfig parse(std::string_view json, const std::filesystem::path& base_dir);

  /// Thresholds and bounds in range; throws InvalidArgument.
  void validate() const;
};

/// Stage that failed inside run_pipeline.
class StageError : public DataError {
 public:
  StageError(std::string stage, const std::string& message)
      : DataError("pipeline stage '" + stage + "' failed: " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Text encoder selected by the config: the precomputed adapter when
/// `paths.encodings` is set, otherwise the subword baseline over `table`.
std::shared_ptr<const TextEncoder> make_encoder(const PipelineConfig& config,
                                                std::shared_ptr<const EmbeddingTable> table,
                                                const StopwordList& stopwords);

/// make_encoder over the configured vectors and stopwords; the vector file
/// is only read when the baseline backend is selected.
std::shared_ptr<const TextEncoder> load_encoder(const PipelineConfig& config);

StopwordList load_stopwords(const PipelineConfig& config);

/// Content hash over every input file's bytes and the parameters.
std::string compute_snapshot_id(const PipelineConfig& config);

/// ingest -> profiles -> pairwise similarity -> per-project recommendations
/// -> backlog -> persist under output_dir/snapshots/<id>/, then repoint
/// output_dir/LATEST. Identical inputs reuse the existing snapshot.
/// A lock file keeps concurrent runs off the same output directory; failed
/// runs leave no partial snapshot behind.
Snapshot run_pipeline(const PipelineConfig& config);

}  // namespace riskdisc
