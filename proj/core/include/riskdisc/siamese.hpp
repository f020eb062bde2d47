#pragma once

#include "riskdisc/corpus.hpp"
#include "riskdisc/encoder.hpp"
#include "riskdisc/error.hpp"
#include "riskdisc/vector.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace riskdisc {

/// Shared linear map applied to both sides of a pair on top of frozen
/// encodings. Row-major dim x dim weights; identity when default built.
class ProjectionHead {
 public:
  explicit ProjectionHead(std::size_t dim);
  ProjectionHead(std::size_t dim, std::vector<double> weights);

  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<double> weights() noexcept { return weights_; }
  double at(std::size_t row, std::size_t col) const { return weights_[row * dim_ + col]; }

  /// Squared Frobenius distance to the identity.
  double distance_from_identity_sq() const;

  std::string to_json() const;
  static ProjectionHead from_json(std::string_view json);

  bool operator==(const ProjectionHead&) const = default;

 private:
  std::size_t dim_;
  std::vector<double> weights_;
};

/// normalize(W v). Throws InvalidArgument for the sentinel or a dimension
/// mismatch and Error when W v is numerically zero.
UnitVector head_forward(const ProjectionHead& head, const UnitVector& v);

/// 1 - cos(head(x), head(y)).
double pair_loss(const ProjectionHead& head, const UnitVector& x, const UnitVector& y);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d W, row-major
};

/// pair_loss + l2_lambda * ||W - I||^2 and its analytic gradient.
LossGradient pair_objective(const ProjectionHead& head, const UnitVector& x, const UnitVector& y,
                            double l2_lambda = 0.0);

/// Max relative error between the analytic gradient of pair_objective and
/// central finite differences with step `epsilon`, entry by entry. The
/// denominator is max(|analytic|, |numeric|, kGradCheckFloor).
double grad_check(const ProjectionHead& head, const UnitVector& x, const UnitVector& y,
                  double epsilon = 1e-5, double l2_lambda = 0.0);

inline constexpr double kGradCheckFloor = 1e-6;

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 200;
  double dropout_rate = 0.0;   // applied to input components while training
  double l2_lambda = 0.0;      // weight of ||W - I||^2
  double negative_weight = 0.0;  // in-batch negatives; 0 disables them
  std::uint64_t seed = 42;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct TrainResult {
  ProjectionHead head;
  std::vector<double> loss_history;  // objective at the start of each epoch
  std::size_t skipped_pairs = 0;
};

/// Raised when the objective or weights stop being finite.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, ProjectionHead last_stable, std::vector<double> history)
      : Error(what), last_stable_(std::move(last_stable)), history_(std::move(history)) {}

  const ProjectionHead& last_stable_head() const noexcept { return last_stable_; }
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  ProjectionHead last_stable_;
  std::vector<double> history_;
};

using EncodedPair = std::pair<UnitVector, UnitVector>;

/// Full-batch gradient descent from the identity on
///   mean_i (1 - c_ii) + negative_weight * mean_{i != j} c_ij + l2_lambda * ||W - I||^2
/// where c_ij = cos(W x_i', W y_j') and x', y' carry inverted dropout
/// (keep probability 1 - p, survivors scaled by 1 / (1 - p)), resampled every
/// epoch from `seed`. Deterministic for a given seed.
TrainResult train_head_on_vectors(std::span<const EncodedPair> pairs, const TrainConfig& config);

/// Encodes each pair's normalized texts and trains on the encodable ones.
/// Throws DataError when no pair can be encoded.
TrainResult train_head(std::span<const ParallelPair> pairs, const TextEncoder& encoder,
                       const TrainConfig& config);

struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::string> row_labels;     // raw texts
  std::vector<std::string> column_labels;  // curated texts
  std::vector<double> values;              // row-major cosines

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

/// values[i][j] = cos(h(enc(raw_i)), h(enc(curated_j))), with h the head or
/// the identity when `head` is null. Throws DataError naming any text that
/// cannot be encoded.
SimilarityMatrix similarity_matrix(const TextEncoder& encoder, const ProjectionHead* head,
                                   std::span<const std::string> raw_texts,
                                   std::span<const std::string> curated_texts);

/// Builds a matrix from explicit values (e.g. published tables).
SimilarityMatrix make_matrix(std::size_t n, std::vector<double> values);

struct UpliftStats {
  double mean_diag_pre = 0.0;
  double mean_diag_post = 0.0;
  std::vector<double> diag_uplift;            // post - pre per index
  std::optional<double> mean_offdiag_pre;     // empty for 1x1
  std::optional<double> mean_offdiag_post;
};

/// Throws InvalidArgument unless both matrices are square of equal size.
UpliftStats uplift_report(const SimilarityMatrix& pre, const SimilarityMatrix& post);

struct EvalResult {
  double r = 0.0;
  double t_stat = 0.0;  // r * sqrt((n - 2) / (1 - r^2)); +-inf when |r| = 1
  std::size_t n = 0;
  std::size_t skipped = 0;
};

/// Sample Pearson correlation. Throws InvalidArgument on length mismatch,
/// n < 3, or a constant sequence.
EvalResult pearson(std::span<const double> xs, std::span<const double> ys);

struct StsRow {
  double gold = 0.0;
  std::string sentence1;
  std::string sentence2;
};

/// "gold<TAB>sentence1<TAB>sentence2" per line, gold in [0, 5].
std::vector<StsRow> load_sts(const std::filesystem::path& path);
std::vector<StsRow> load_sts(std::istream& in, std::string_view source);

/// Pearson r between predicted cosines and gold scores over the rows the
/// encoder can encode; the rest are counted in `skipped`.
EvalResult sts_eval(const TextEncoder& encoder, const ProjectionHead* head,
                    std::span<const StsRow> rows);
EvalResult sts_eval(const TextEncoder& encoder, const ProjectionHead* head,
                    const std::filesystem::path& benchmark_path);

/// The fine-tuning experiment: train on the encodable pairs, then the
/// raw x curated similarity matrix before and after, and their uplift.
struct FinetuneReport {
  TrainResult train;
  SimilarityMatrix pre;
  SimilarityMatrix post;
  UpliftStats uplift;
};

FinetuneReport finetune_experiment(std::span<const ParallelPair> pairs, const TextEncoder& encoder,
                                   const TrainConfig& config);

std::string format_matrix(const SimilarityMatrix& m);
std::string matrix_to_json(const SimilarityMatrix& m);
std::string uplift_to_json(const UpliftStats& stats);

}  // namespace riskdisc
