#include "riskdisc/keyphrase.hpp"

#include "riskdisc/corpus.hpp"
#include "riskdisc/error.hpp"
#include "riskdisc/text.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

namespace riskdisc {

namespace detail {
extern const std::string_view kEnglishStopwords;
}

StopwordList::StopwordList(std::set<std::string, std::less<>> words) : words_(std::move(words)) {
  if (words_.empty()) throw InvalidArgument("stopword list is empty");
  for (const auto& w : words_) {
    if (w.empty() || normalize_text(w) != w) {
      throw InvalidArgument("stopword \"" + w + "\" is not normalized lowercase");
    }
  }
}

StopwordList StopwordList::parse(std::string_view contents) {
  std::set<std::string, std::less<>> words;
  std::istringstream in{std::string(contents)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto word = normalize_text(line);
    if (!word.empty()) words.insert(std::move(word));
  }
  return StopwordList(std::move(words));
}

StopwordList StopwordList::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

const StopwordList& StopwordList::english() {
  static const StopwordList list = parse(detail::kEnglishStopwords);
  return list;
}

std::vector<ScoredPhrase> rake_extract(std::string_view text, const StopwordList& stopwords,
                                       std::size_t max_phrase_len) {
  if (max_phrase_len == 0) throw InvalidArgument("max_phrase_len must be positive");

  std::vector<std::vector<std::string>> candidates;
  for (const auto& clause : split_clauses(text)) {
    std::vector<std::string> run;
    auto flush = [&] {
      for (std::size_t i = 0; i < run.size(); i += max_phrase_len) {
        const auto end = std::min(run.size(), i + max_phrase_len);
        candidates.emplace_back(run.begin() + static_cast<std::ptrdiff_t>(i),
                                run.begin() + static_cast<std::ptrdiff_t>(end));
      }
      run.clear();
    };
    for (const auto& word : clause) {
      if (stopwords.contains(word)) {
        flush();
      } else {
        run.push_back(word);
      }
    }
    flush();
  }

  struct WordStats {
    double degree = 0;
    double frequency = 0;
  };
  std::unordered_map<std::string, WordStats> stats;
  for (const auto& cand : candidates) {
    for (const auto& w : cand) {
      auto& s = stats[w];
      s.degree += static_cast<double>(cand.size());
      s.frequency += 1;
    }
  }

  std::map<std::string, ScoredPhrase> unique;
  for (const auto& cand : candidates) {
    std::string phrase;
    for (const auto& w : cand) {
      if (!phrase.empty()) phrase += ' ';
      phrase += w;
    }
    if (unique.contains(phrase)) continue;
    double score = 0;
    for (const auto& w : cand) {
      const auto& s = stats.at(w);
      score += s.degree / s.frequency;
    }
    unique.emplace(phrase, ScoredPhrase{phrase, cand, score});
  }

  std::vector<ScoredPhrase> out;
  out.reserve(unique.size());
  for (auto& [_, p] : unique) out.push_back(std::move(p));
  std::stable_sort(out.begin(), out.end(), [](const ScoredPhrase& a, const ScoredPhrase& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.phrase < b.phrase;
  });
  return out;
}

}  // namespace riskdisc
