#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace riskdisc {

struct SubwordParams {
  std::size_t nmin = 3;
  std::size_t nmax = 6;
  std::size_t bucket_count = 100'000;
  std::uint64_t seed = 42;

  /// Throws InvalidArgument unless 1 <= nmin <= nmax and bucket_count > 0.
  void validate() const;
  bool operator==(const SubwordParams&) const = default;
};

/// Pretrained word vectors plus hashed character n-gram buckets for
/// out-of-vocabulary words. Immutable after construction.
///
/// Bucket vectors are seeded pseudo-random values, uniform in
/// [-0.5/dim, 0.5/dim) per component. They are derived on demand from
/// (seed, bucket, component) rather than stored, so two tables with equal
/// parameters agree on every bucket regardless of load order.
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, std::unordered_map<std::string, std::vector<double>> vocab,
                 SubwordParams params);

  /// Word-vector text format: optional header "V D", then "word c1 ... cD"
  /// per line. Without a header the dimension comes from the first row.
  static EmbeddingTable load(const std::filesystem::path& path, SubwordParams params);
  static EmbeddingTable load(std::istream& in, std::string_view source, SubwordParams params);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }
  const SubwordParams& params() const noexcept { return params_; }

  /// Stored vector for `word`, or nullptr when out of vocabulary.
  const std::vector<double>* find(const std::string& word) const;

  double bucket_component(std::size_t bucket, std::size_t component) const;
  std::vector<double> bucket_vector(std::size_t bucket) const;
  std::size_t bucket_of(std::string_view gram) const;

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vocab_;
  SubwordParams params_;
};

inline EmbeddingTable load_vectors(const std::filesystem::path& path, std::size_t nmin,
                                   std::size_t nmax, std::size_t bucket_count, std::uint64_t seed) {
  return EmbeddingTable::load(path, SubwordParams{nmin, nmax, bucket_count, seed});
}

/// Character n-grams of "<word>" over code points: every substring of length
/// nmin..nmax, grouped by length (shortest first) and left to right within a
/// length, followed by the whole wrapped token when it is longer than nmax.
std::vector<std::string> char_ngrams(std::string_view word, std::size_t nmin, std::size_t nmax);

/// Stored vector for in-vocabulary words; otherwise the mean of the bucket
/// vectors of the word's n-grams (bucket = fnv1a_64(gram) mod bucket_count).
std::vector<double> embed_word(const EmbeddingTable& table, std::string_view word);

}  // namespace riskdisc
