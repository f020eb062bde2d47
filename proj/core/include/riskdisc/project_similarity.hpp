#pragma once

#include "riskdisc/corpus.hpp"
#include "riskdisc/embedding.hpp"
#include "riskdisc/keyphrase.hpp"
#include "riskdisc/vector.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace riskdisc {

struct ProjectProfile {
  std::string id;
  std::vector<ScoredPhrase> phrases;
  UnitVector vector;
};

struct ProjectMatch {
  std::string id;
  double score = 0.0;

  bool operator==(const ProjectMatch&) const = default;
};

/// Angular similarity 1 - arccos(u.v)/pi, in [0, 1]. Ranks exactly like
/// cosine but spreads scores apart near 1, where cosine saturates.
/// Throws InvalidArgument for sentinel inputs.
double arc_cos_sim(const UnitVector& u, const UnitVector& v);

enum class Pooling {
  score_weighted,  // phrase means weighted by RAKE score
  mean,            // every phrase weighs the same
};

struct ProfileOptions {
  std::size_t max_phrase_len = kDefaultMaxPhraseLen;
  Pooling pooling = Pooling::score_weighted;
};

/// Profile vector = normalize(sum_p w_p * mean_{word in p} embed_word(word) / sum_p w_p).
/// Without phrases (or when the blend is zero) it falls back to the mean
/// embedding of every non-stopword token. Throws DataError when neither
/// path yields a direction.
ProjectProfile build_profile(const ProjectRecord& record, const EmbeddingTable& table,
                             const StopwordList& stopwords, const ProfileOptions& options = {});

/// The k best arc-cosine matches for `id`, never `id` itself, dropping
/// scores below `floor`, ordered by score descending then id ascending.
/// Throws NotFound for an unknown id and InvalidArgument for floor outside
/// [0, 1].
std::vector<ProjectMatch> top_k_similar(std::string_view id,
                                        std::span<const ProjectProfile> profiles, std::size_t k,
                                        double floor);

/// Full ranking of every other profile for each profile (index-aligned with
/// `profiles`), computed from one pass over the N(N-1)/2 pairs.
std::vector<std::vector<ProjectMatch>> rank_all(std::span<const ProjectProfile> profiles);

/// Applies k and floor to an already sorted ranking.
std::vector<ProjectMatch> truncate_ranking(std::span<const ProjectMatch> ranking, std::size_t k,
                                           double floor);

}  // namespace riskdisc
