#include "riskdisc/encoder.hpp"

#include "riskdisc/error.hpp"
#include "riskdisc/hash.hpp"
#include "riskdisc/text.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace riskdisc {

SubwordBaselineEncoder::SubwordBaselineEncoder(std::shared_ptr<const EmbeddingTable> table,
                                               std::optional<StopwordList> stopwords)
    : table_(std::move(table)), stopwords_(std::move(stopwords)) {
  if (!table_) throw InvalidArgument("baseline encoder needs an embedding table");
}

UnitVector SubwordBaselineEncoder::encode(std::string_view normalized_text) const {
  std::vector<double> sum(table_->dim(), 0.0);
  std::size_t count = 0;
  for (const auto& word : tokenize(normalized_text)) {
    if (stopwords_ && stopwords_->contains(word)) continue;
    const auto v = embed_word(*table_, word);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
    ++count;
  }
  if (count == 0) return UnitVector::sentinel(table_->dim());
  for (double& c : sum) c /= static_cast<double>(count);
  return UnitVector::normalize(std::move(sum));
}

std::string SubwordBaselineEncoder::id() const {
  const auto& p = table_->params();
  return "subword-baseline(dim=" + std::to_string(table_->dim()) +
         ",nmin=" + std::to_string(p.nmin) + ",nmax=" + std::to_string(p.nmax) +
         ",buckets=" + std::to_string(p.bucket_count) + ",seed=" + std::to_string(p.seed) +
         (stopwords_ ? ",stopwords=" + std::to_string(stopwords_->size()) : std::string()) + ")";
}

PrecomputedEncoder::PrecomputedEncoder(std::size_t dim,
                                       std::unordered_map<std::string, UnitVector> by_digest,
                                       std::string source_digest)
    : dim_(dim), by_digest_(std::move(by_digest)), source_digest_(std::move(source_digest)) {
  if (dim_ == 0) throw InvalidArgument("precomputed encoder dimension must be positive");
  for (const auto& [key, v] : by_digest_) {
    if (v.dim() != dim_) throw InvalidArgument("precomputed vector " + key + " has wrong dimension");
  }
}

PrecomputedEncoder PrecomputedEncoder::load(std::istream& in, std::string_view source) {
  const std::string src(source);
  std::ostringstream raw;
  raw << in.rdbuf();
  const std::string contents = raw.str();

  std::unordered_map<std::string, UnitVector> by_digest;
  std::size_t dim = 0;
  std::istringstream lines(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(src, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("sha256") || !obj["sha256"].is_string()) {
      throw ParseError(src, line_no, "missing string field \"sha256\"");
    }
    if (!obj.contains("vector") || !obj["vector"].is_array()) {
      throw ParseError(src, line_no, "missing array field \"vector\"");
    }
    std::vector<double> vec;
    for (const auto& c : obj["vector"]) {
      if (!c.is_number()) throw ParseError(src, line_no, "non-numeric vector component");
      vec.push_back(c.get<double>());
    }
    if (vec.empty()) throw ParseError(src, line_no, "empty vector");
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim) {
      throw ParseError(src, line_no,
                       "dimension mismatch: " + std::to_string(vec.size()) + " vs " +
                           std::to_string(dim));
    }
    UnitVector unit;
    try {
      unit = UnitVector::normalize(std::move(vec));
    } catch (const InvalidArgument& e) {
      throw ParseError(src, line_no, e.what());
    }
    by_digest.insert_or_assign(obj["sha256"].get<std::string>(), std::move(unit));
  }
  if (dim == 0) throw DataError(src + ": no precomputed encodings");
  return PrecomputedEncoder(dim, std::move(by_digest), sha256_hex(contents));
}

PrecomputedEncoder PrecomputedEncoder::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return load(in, path.string());
}

UnitVector PrecomputedEncoder::encode(std::string_view normalized_text) const {
  const auto digest = sha256_hex(normalized_text);
  const auto it = by_digest_.find(digest);
  if (it == by_digest_.end()) {
    throw NotFound("no precomputed encoding for text (sha256 " + digest + ")");
  }
  return it->second;
}

std::string PrecomputedEncoder::id() const {
  return "precomputed(dim=" + std::to_string(dim_) + ",entries=" +
         std::to_string(by_digest_.size()) +
         (source_digest_.empty() ? std::string() : ",file=" + source_digest_.substr(0, 16)) + ")";
}

UnitVector CachingEncoder::encode(std::string_view normalized_text) const {
  std::string key(normalized_text);
  {
    std::lock_guard lock(mu_);
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto v = inner_->encode(normalized_text);
  std::lock_guard lock(mu_);
  cache_.emplace(std::move(key), v);
  return v;
}

}  // namespace riskdisc
