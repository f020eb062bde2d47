#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace riskdisc {

/// Non-empty set of lowercase stopwords.
class StopwordList {
 public:
  /// Throws InvalidArgument when empty or when an entry is not normalized
  /// lowercase text.
  explicit StopwordList(std::set<std::string, std::less<>> words);

  /// One token per line; '#' starts a comment; blank lines ignored. Entries
  /// are normalized before insertion.
  static StopwordList load(const std::filesystem::path& path);
  static StopwordList parse(std::string_view contents);

  /// The built-in English list (same contents as data/stopwords_en.txt).
  static const StopwordList& english();

  bool contains(std::string_view word) const { return words_.find(word) != words_.end(); }
  const std::set<std::string, std::less<>>& words() const noexcept { return words_; }
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::set<std::string, std::less<>> words_;
};

struct ScoredPhrase {
  std::string phrase;               // words joined by single spaces
  std::vector<std::string> words;
  double score = 0.0;

  bool operator==(const ScoredPhrase&) const = default;
};

inline constexpr std::size_t kDefaultMaxPhraseLen = 4;

/// RAKE over normalized text.
///
/// Candidates are maximal runs of non-stopword words inside a clause (see
/// split_clauses), cut into chunks of at most `max_phrase_len` words. Each
/// candidate occurrence adds its length to the degree of every member word
/// and 1 to its frequency; word score = degree / frequency and phrase score
/// = sum of member word scores. Repeated candidates collapse to one entry.
/// Result is sorted by score descending, then phrase ascending.
std::vector<ScoredPhrase> rake_extract(std::string_view text, const StopwordList& stopwords,
                                       std::size_t max_phrase_len = kDefaultMaxPhraseLen);

}  // namespace riskdisc
