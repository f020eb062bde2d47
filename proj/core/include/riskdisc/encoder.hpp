#pragma once

#include "riskdisc/embedding.hpp"
#include "riskdisc/keyphrase.hpp"
#include "riskdisc/vector.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace riskdisc {

/// Sentence encoder contract. `encode` takes normalized text, is
/// deterministic, and returns a unit vector of `dim()` components or the
/// sentinel when nothing in the text can be encoded.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual UnitVector encode(std::string_view normalized_text) const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string id() const = 0;
};

inline UnitVector encode_text(const TextEncoder& encoder, std::string_view normalized_text) {
  return encoder.encode(normalized_text);
}

/// Averages embed_word over the text's words (stopwords dropped when a list
/// is given) and normalizes.
class SubwordBaselineEncoder final : public TextEncoder {
 public:
  explicit SubwordBaselineEncoder(std::shared_ptr<const EmbeddingTable> table,
                                  std::optional<StopwordList> stopwords = std::nullopt);

  UnitVector encode(std::string_view normalized_text) const override;
  std::size_t dim() const override { return table_->dim(); }
  std::string id() const override;

  const EmbeddingTable& table() const { return *table_; }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  std::optional<StopwordList> stopwords_;
};

/// Replays vectors computed offline by an external encoder, keyed by the
/// SHA-256 of the normalized text. A text without an entry raises NotFound.
class PrecomputedEncoder final : public TextEncoder {
 public:
  PrecomputedEncoder(std::size_t dim, std::unordered_map<std::string, UnitVector> by_digest,
                     std::string source_digest = {});

  /// One object per line: {"sha256": hex, "vector": [reals]}.
  static PrecomputedEncoder load(const std::filesystem::path& path);
  static PrecomputedEncoder load(std::istream& in, std::string_view source);

  UnitVector encode(std::string_view normalized_text) const override;
  std::size_t dim() const override { return dim_; }
  std::string id() const override;
  std::size_t size() const { return by_digest_.size(); }

 private:
  std::size_t dim_;
  std::unordered_map<std::string, UnitVector> by_digest_;
  std::string source_digest_;
};

/// Memoizes successful encodings of another encoder. Thread-safe.
class CachingEncoder final : public TextEncoder {
 public:
  explicit CachingEncoder(std::shared_ptr<const TextEncoder> inner) : inner_(std::move(inner)) {}

  UnitVector encode(std::string_view normalized_text) const override;
  std::size_t dim() const override { return inner_->dim(); }
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<const TextEncoder> inner_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, UnitVector> cache_;
};

}  // namespace riskdisc
