#include "riskdisc/embedding.hpp"

#include "riskdisc/error.hpp"
#include "riskdisc/hash.hpp"

#include <unicode/utf8.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace riskdisc {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_size(std::string_view s, std::size_t& out) {
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

void SubwordParams::validate() const {
  if (nmin < 1 || nmin > nmax) {
    throw InvalidArgument("n-gram bounds must satisfy 1 <= nmin <= nmax (got " +
                          std::to_string(nmin) + ", " + std::to_string(nmax) + ")");
  }
  if (bucket_count == 0) throw InvalidArgument("bucket_count must be positive");
}

EmbeddingTable::EmbeddingTable(std::size_t dim,
                               std::unordered_map<std::string, std::vector<double>> vocab,
                               SubwordParams params)
    : dim_(dim), vocab_(std::move(vocab)), params_(params) {
  params_.validate();
  if (dim_ == 0) throw InvalidArgument("embedding dimension must be positive");
  for (const auto& [word, vec] : vocab_) {
    if (vec.size() != dim_) throw InvalidArgument("vector for \"" + word + "\" has wrong dimension");
    for (const double c : vec) {
      if (!std::isfinite(c)) throw InvalidArgument("vector for \"" + word + "\" is not finite");
    }
  }
}

EmbeddingTable EmbeddingTable::load(std::istream& in, std::string_view source,
                                    SubwordParams params) {
  params.validate();
  const std::string src(source);
  std::unordered_map<std::string, std::vector<double>> vocab;
  std::size_t dim = 0;
  std::size_t declared_rows = 0;
  bool has_header = false;
  std::size_t rows = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2) {
      std::size_t v = 0;
      std::size_t d = 0;
      if (parse_size(fields[0], v) && parse_size(fields[1], d)) {
        if (d == 0) throw ParseError(src, line_no, "header declares dimension 0");
        has_header = true;
        declared_rows = v;
        dim = d;
        continue;
      }
    }
    if (dim == 0) dim = fields.size() - 1;
    if (dim == 0) throw ParseError(src, line_no, "row has no vector components");
    if (fields.size() - 1 != dim) {
      throw ParseError(src, line_no,
                       "dimension mismatch: row \"" + std::string(fields[0]) + "\" has " +
                           std::to_string(fields.size() - 1) + " components, expected " +
                           std::to_string(dim));
    }
    std::vector<double> vec(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const auto f = fields[i + 1];
      const auto* end = f.data() + f.size();
      const auto [ptr, ec] = std::from_chars(f.data(), end, vec[i]);
      if (ec != std::errc() || ptr != end || !std::isfinite(vec[i])) {
        throw ParseError(src, line_no,
                         "non-numeric component \"" + std::string(f) + "\" in row \"" +
                             std::string(fields[0]) + "\"");
      }
    }
    ++rows;
    // First occurrence wins for repeated words.
    vocab.emplace(std::string(fields[0]), std::move(vec));
  }
  if (has_header && rows != declared_rows) {
    throw DataError(src + ": header declares " + std::to_string(declared_rows) + " rows, found " +
                    std::to_string(rows));
  }
  if (dim == 0) throw DataError(src + ": no header and no rows; dimension unknown");
  return EmbeddingTable(dim, std::move(vocab), params);
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, SubwordParams params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return load(in, path.string(), params);
}

const std::vector<double>* EmbeddingTable::find(const std::string& word) const {
  const auto it = vocab_.find(word);
  return it == vocab_.end() ? nullptr : &it->second;
}

double EmbeddingTable::bucket_component(std::size_t bucket, std::size_t component) const {
  std::uint64_t x = splitmix64(params_.seed);
  x = splitmix64(x ^ static_cast<std::uint64_t>(bucket));
  x = splitmix64(x ^ static_cast<std::uint64_t>(component));
  const double unit = static_cast<double>(x >> 11) * 0x1.0p-53;  // [0, 1)
  return (unit - 0.5) / static_cast<double>(dim_);
}

std::vector<double> EmbeddingTable::bucket_vector(std::size_t bucket) const {
  std::vector<double> v(dim_);
  for (std::size_t c = 0; c < dim_; ++c) v[c] = bucket_component(bucket, c);
  return v;
}

std::size_t EmbeddingTable::bucket_of(std::string_view gram) const {
  return static_cast<std::size_t>(fnv1a_64(gram) % params_.bucket_count);
}

std::vector<std::string> char_ngrams(std::string_view word, std::size_t nmin, std::size_t nmax) {
  const std::string wrapped = "<" + std::string(word) + ">";
  std::vector<std::size_t> starts;  // byte offset of each code point, plus end
  const auto size = static_cast<int32_t>(wrapped.size());
  for (int32_t pos = 0; pos < size;) {
    starts.push_back(static_cast<std::size_t>(pos));
    U8_FWD_1(reinterpret_cast<const uint8_t*>(wrapped.data()), pos, size);
  }
  const std::size_t length = starts.size();
  starts.push_back(wrapped.size());

  std::vector<std::string> grams;
  for (std::size_t n = nmin; n <= std::min(nmax, length); ++n) {
    for (std::size_t i = 0; i + n <= length; ++i) {
      grams.emplace_back(wrapped.substr(starts[i], starts[i + n] - starts[i]));
    }
  }
  if (length > nmax) grams.push_back(wrapped);
  return grams;
}

std::vector<double> embed_word(const EmbeddingTable& table, std::string_view word) {
  if (const auto* stored = table.find(std::string(word))) return *stored;
  const auto& p = table.params();
  const auto grams = char_ngrams(word, p.nmin, p.nmax);
  std::vector<double> mean(table.dim(), 0.0);
  if (grams.empty()) return mean;
  for (const auto& g : grams) {
    const auto b = table.bucket_of(g);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += table.bucket_component(b, c);
  }
  for (double& c : mean) c /= static_cast<double>(grams.size());
  return mean;
}

}  // namespace riskdisc
