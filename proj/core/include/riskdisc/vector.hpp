#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace riskdisc {

/// A vector of Euclidean norm 1 (within 1e-6), or the zero sentinel used for
/// text with nothing to encode.
class UnitVector {
 public:
  UnitVector() = default;

  /// Normalizes `components`. An all-zero input yields the sentinel.
  /// Throws InvalidArgument on non-finite components.
  static UnitVector normalize(std::vector<double> components);
  static UnitVector sentinel(std::size_t dim) { return UnitVector(std::vector<double>(dim, 0.0), true); }

  bool is_sentinel() const noexcept { return sentinel_; }
  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> components() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const UnitVector&) const = default;

 private:
  UnitVector(std::vector<double> values, bool sentinel)
      : values_(std::move(values)), sentinel_(sentinel) {}

  std::vector<double> values_;
  bool sentinel_ = true;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Cosine of two non-sentinel unit vectors: their dot product clamped to
/// [-1, 1], snapped to exactly +-1 within 1e-12 of either end. Throws
/// InvalidArgument for sentinel inputs or a dimension mismatch.
double cosine_similarity(const UnitVector& u, const UnitVector& v);

inline constexpr double kCosineSnap = 1e-12;

}  // namespace riskdisc
