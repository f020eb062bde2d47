#include "riskdisc/siamese.hpp"

#include "riskdisc/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace riskdisc {

namespace {

constexpr double kZeroNorm = 1e-12;

std::vector<double> matvec(std::span<const double> w, std::size_t dim, std::span<const double> x) {
  std::vector<double> out(dim, 0.0);
  for (std::size_t r = 0; r < dim; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += w[r * dim + k] * x[k];
    out[r] = s;
  }
  return out;
}

// Cosine of (W x, W y); when `grad` is given, adds coef * d cos / d W to it.
// Empty when either projection is numerically zero.
std::optional<double> projected_cosine(std::span<const double> w, std::size_t dim,
                                       std::span<const double> x, std::span<const double> y,
                                       double coef, std::vector<double>* grad) {
  auto a = matvec(w, dim, x);
  auto b = matvec(w, dim, y);
  const double na = norm(a);
  const double nb = norm(b);
  if (na < kZeroNorm || nb < kZeroNorm) return std::nullopt;
  for (double& v : a) v /= na;
  for (double& v : b) v /= nb;
  const double c = dot(a, b);
  if (grad != nullptr) {
    for (std::size_t r = 0; r < dim; ++r) {
      const double da = (b[r] - c * a[r]) / na;
      const double db = (a[r] - c * b[r]) / nb;
      for (std::size_t k = 0; k < dim; ++k) {
        (*grad)[r * dim + k] += coef * (da * x[k] + db * y[k]);
      }
    }
  }
  return c;
}

void check_dims(const ProjectionHead& head, const UnitVector& v) {
  if (v.is_sentinel()) throw InvalidArgument("projection of the zero-vector sentinel");
  if (v.dim() != head.dim()) {
    throw InvalidArgument("head dimension " + std::to_string(head.dim()) +
                          " does not match vector dimension " + std::to_string(v.dim()));
  }
}

double penalty_and_gradient(std::span<const double> w, std::size_t dim, double lambda,
                            std::vector<double>* grad) {
  if (lambda == 0.0) return 0.0;
  double sq = 0.0;
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = w[r * dim + k] - (r == k ? 1.0 : 0.0);
      sq += d * d;
      if (grad != nullptr) (*grad)[r * dim + k] += 2.0 * lambda * d;
    }
  }
  return lambda * sq;
}

bool all_finite(std::span<const double> v) {
  for (const double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::vector<double> identity(std::size_t dim) {
  std::vector<double> w(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) w[i * dim + i] = 1.0;
  return w;
}

// Inverted dropout over one input vector.
std::vector<double> drop(std::span<const double> v, double rate, std::mt19937_64& rng) {
  std::vector<double> out(v.begin(), v.end());
  if (rate == 0.0) return out;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& c : out) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    c = u < rate ? 0.0 : c * keep_scale;
  }
  return out;
}

}  // namespace

ProjectionHead::ProjectionHead(std::size_t dim) : dim_(dim), weights_(identity(dim)) {
  if (dim_ == 0) throw InvalidArgument("projection head dimension must be positive");
}

ProjectionHead::ProjectionHead(std::size_t dim, std::vector<double> weights)
    : dim_(dim), weights_(std::move(weights)) {
  if (dim_ == 0) throw InvalidArgument("projection head dimension must be positive");
  if (weights_.size() != dim_ * dim_) throw InvalidArgument("projection head needs dim*dim weights");
  if (!all_finite(weights_)) throw InvalidArgument("projection head weights must be finite");
}

double ProjectionHead::distance_from_identity_sq() const {
  return penalty_and_gradient(weights_, dim_, 1.0, nullptr);
}

std::string ProjectionHead::to_json() const {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < dim_; ++r) {
    rows.push_back(std::vector<double>(weights_.begin() + static_cast<std::ptrdiff_t>(r * dim_),
                                       weights_.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim_)));
  }
  return nlohmann::ordered_json{{"dim", dim_}, {"weights", std::move(rows)}}.dump();
}

ProjectionHead ProjectionHead::from_json(std::string_view json) {
  try {
    const auto obj = nlohmann::json::parse(json);
    const auto dim = obj.at("dim").get<std::size_t>();
    std::vector<double> w;
    for (const auto& row : obj.at("weights")) {
      const auto r = row.get<std::vector<double>>();
      if (r.size() != dim) throw DataError("projection head row has wrong length");
      w.insert(w.end(), r.begin(), r.end());
    }
    return ProjectionHead(dim, std::move(w));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed projection head: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("malformed projection head: ") + e.what());
  }
}

UnitVector head_forward(const ProjectionHead& head, const UnitVector& v) {
  check_dims(head, v);
  auto out = matvec(head.weights(), head.dim(), v.components());
  // Already unit length; renormalizing could move the last bit.
  if (std::equal(out.begin(), out.end(), v.components().begin())) return v;
  if (norm(out) < kZeroNorm) throw Error("projection W v is numerically zero");
  return UnitVector::normalize(std::move(out));
}

LossGradient pair_objective(const ProjectionHead& head, const UnitVector& x, const UnitVector& y,
                            double l2_lambda) {
  check_dims(head, x);
  check_dims(head, y);
  LossGradient out{0.0, std::vector<double>(head.dim() * head.dim(), 0.0)};
  const auto c =
      projected_cosine(head.weights(), head.dim(), x.components(), y.components(), -1.0, &out.grad);
  if (!c) throw Error("projection W v is numerically zero");
  out.loss = 1.0 - *c + penalty_and_gradient(head.weights(), head.dim(), l2_lambda, &out.grad);
  return out;
}

double pair_loss(const ProjectionHead& head, const UnitVector& x, const UnitVector& y) {
  const auto px = head_forward(head, x);
  const auto py = head_forward(head, y);
  return std::max(0.0, 1.0 - dot(px.components(), py.components()));
}

double grad_check(const ProjectionHead& head, const UnitVector& x, const UnitVector& y,
                  double epsilon, double l2_lambda) {
  const auto analytic = pair_objective(head, x, y, l2_lambda).grad;
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    ProjectionHead plus = head;
    ProjectionHead minus = head;
    plus.weights()[i] += epsilon;
    minus.weights()[i] -= epsilon;
    const double numeric = (pair_objective(plus, x, y, l2_lambda).loss -
                            pair_objective(minus, x, y, l2_lambda).loss) /
                           (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kGradCheckFloor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning_rate must be a non-negative finite number");
  }
  if (epochs == 0) throw InvalidArgument("epochs must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw InvalidArgument("dropout_rate must lie in [0, 1)");
  }
  if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) {
    throw InvalidArgument("l2_lambda must be non-negative");
  }
  if (!(negative_weight >= 0.0) || !std::isfinite(negative_weight)) {
    throw InvalidArgument("negative_weight must be non-negative");
  }
}

TrainResult train_head_on_vectors(std::span<const EncodedPair> pairs, const TrainConfig& config) {
  config.validate();
  if (pairs.empty()) throw DataError("no encodable training pairs");
  const std::size_t dim = pairs.front().first.dim();
  for (const auto& [x, y] : pairs) {
    if (x.is_sentinel() || y.is_sentinel()) throw InvalidArgument("training pair holds a sentinel");
    if (x.dim() != dim || y.dim() != dim) throw InvalidArgument("training pairs differ in dimension");
  }

  const std::size_t n = pairs.size();
  const bool negatives = config.negative_weight > 0.0 && n > 1;
  std::mt19937_64 rng(config.seed);
  ProjectionHead head(dim);
  std::vector<double> history;
  history.reserve(config.epochs);
  std::vector<std::vector<double>> xs(n);
  std::vector<std::vector<double>> ys(n);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = drop(pairs[i].first.components(), config.dropout_rate, rng);
      ys[i] = drop(pairs[i].second.components(), config.dropout_rate, rng);
    }

    std::vector<double> grad(dim * dim, 0.0);
    double objective = 0.0;
    const double pos_coef = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (const auto c = projected_cosine(head.weights(), dim, xs[i], ys[i], -pos_coef, &grad)) {
        objective += pos_coef * (1.0 - *c);
      }
    }
    if (negatives) {
      const double neg_coef = config.negative_weight / static_cast<double>(n * (n - 1));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          if (const auto c = projected_cosine(head.weights(), dim, xs[i], ys[j], neg_coef, &grad)) {
            objective += neg_coef * *c;
          }
        }
      }
    }
    objective += penalty_and_gradient(head.weights(), dim, config.l2_lambda, &grad);

    if (!std::isfinite(objective) || !all_finite(grad)) {
      throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch), head, history);
    }
    history.push_back(objective);

    std::vector<double> next(head.weights().begin(), head.weights().end());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] -= config.learning_rate * grad[i];
    if (!all_finite(next)) {
      throw TrainingDiverged("weights diverged at epoch " + std::to_string(epoch), head, history);
    }
    head = ProjectionHead(dim, std::move(next));
  }
  return {std::move(head), std::move(history), 0};
}

TrainResult train_head(std::span<const ParallelPair> pairs, const TextEncoder& encoder,
                       const TrainConfig& config) {
  std::vector<EncodedPair> encoded;
  std::size_t skipped = 0;
  for (const auto& p : pairs) {
    try {
      auto x = encoder.encode(normalize_text(p.raw_text));
      auto y = encoder.encode(normalize_text(p.curated_text));
      if (x.is_sentinel() || y.is_sentinel()) {
        ++skipped;
        continue;
      }
      encoded.emplace_back(std::move(x), std::move(y));
    } catch (const DataError&) {
      ++skipped;
    }
  }
  if (encoded.empty()) throw DataError("no encodable pairs in the parallel corpus");
  auto result = train_head_on_vectors(encoded, config);
  result.skipped_pairs = skipped;
  return result;
}

SimilarityMatrix similarity_matrix(const TextEncoder& encoder, const ProjectionHead* head,
                                   std::span<const std::string> raw_texts,
                                   std::span<const std::string> curated_texts) {
  auto encode_all = [&](std::span<const std::string> texts) {
    std::vector<UnitVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      UnitVector v;
      try {
        v = encoder.encode(normalize_text(t));
      } catch (const DataError& e) {
        throw DataError("cannot encode \"" + t + "\": " + e.what());
      }
      if (v.is_sentinel()) throw DataError("cannot encode \"" + t + "\": nothing to encode");
      out.push_back(head != nullptr ? head_forward(*head, v) : std::move(v));
    }
    return out;
  };
  const auto rows = encode_all(raw_texts);
  const auto cols = encode_all(curated_texts);

  SimilarityMatrix m;
  m.rows = rows.size();
  m.cols = cols.size();
  m.row_labels.assign(raw_texts.begin(), raw_texts.end());
  m.column_labels.assign(curated_texts.begin(), curated_texts.end());
  m.values.reserve(m.rows * m.cols);
  for (const auto& r : rows) {
    for (const auto& c : cols) m.values.push_back(cosine_similarity(r, c));
  }
  return m;
}

SimilarityMatrix make_matrix(std::size_t n, std::vector<double> values) {
  if (values.size() != n * n) throw InvalidArgument("matrix needs n*n values");
  SimilarityMatrix m;
  m.rows = m.cols = n;
  for (std::size_t i = 0; i < n; ++i) {
    m.row_labels.push_back(std::to_string(i));
    m.column_labels.push_back(std::to_string(i));
  }
  m.values = std::move(values);
  return m;
}

UpliftStats uplift_report(const SimilarityMatrix& pre, const SimilarityMatrix& post) {
  if (pre.rows != pre.cols || post.rows != post.cols || pre.rows != post.rows || pre.rows == 0) {
    throw InvalidArgument("uplift needs two non-empty square matrices of equal size");
  }
  const std::size_t n = pre.rows;
  UpliftStats s;
  double off_pre = 0.0;
  double off_post = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        s.mean_diag_pre += pre.at(i, i);
        s.mean_diag_post += post.at(i, i);
        s.diag_uplift.push_back(post.at(i, i) - pre.at(i, i));
      } else {
        off_pre += pre.at(i, j);
        off_post += post.at(i, j);
      }
    }
  }
  s.mean_diag_pre /= static_cast<double>(n);
  s.mean_diag_post /= static_cast<double>(n);
  if (n > 1) {
    const auto off = static_cast<double>(n * (n - 1));
    s.mean_offdiag_pre = off_pre / off;
    s.mean_offdiag_post = off_post / off;
  }
  return s;
}

EvalResult pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("pearson: sequences differ in length");
  const std::size_t n = xs.size();
  if (n < 3) throw InvalidArgument("pearson: need at least 3 samples");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw InvalidArgument("pearson: constant sequence");
  EvalResult out;
  out.n = n;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double one_minus = 1.0 - out.r * out.r;
  out.t_stat = one_minus > 0.0
                   ? out.r * std::sqrt(static_cast<double>(n - 2) / one_minus)
                   : std::copysign(std::numeric_limits<double>::infinity(), out.r);
  return out;
}

std::vector<StsRow> load_sts(std::istream& in, std::string_view source) {
  const std::string src(source);
  std::vector<StsRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError(src, line_no, "expected gold<TAB>s1<TAB>s2");
    StsRow row;
    const std::string gold = line.substr(0, t1);
    const auto [ptr, ec] = std::from_chars(gold.data(), gold.data() + gold.size(), row.gold);
    if (ec != std::errc() || ptr != gold.data() + gold.size()) {
      throw ParseError(src, line_no, "gold score \"" + gold + "\" is not a number");
    }
    if (!(row.gold >= 0.0 && row.gold <= 5.0)) {
      throw ParseError(src, line_no, "gold score outside [0, 5]");
    }
    row.sentence1 = line.substr(t1 + 1, t2 - t1 - 1);
    row.sentence2 = line.substr(t2 + 1);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<StsRow> load_sts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return load_sts(in, path.string());
}

EvalResult sts_eval(const TextEncoder& encoder, const ProjectionHead* head,
                    std::span<const StsRow> rows) {
  std::vector<double> predicted;
  std::vector<double> gold;
  std::size_t skipped = 0;
  for (const auto& row : rows) {
    try {
      auto a = encoder.encode(normalize_text(row.sentence1));
      auto b = encoder.encode(normalize_text(row.sentence2));
      if (a.is_sentinel() || b.is_sentinel()) {
        ++skipped;
        continue;
      }
      if (head != nullptr) {
        a = head_forward(*head, a);
        b = head_forward(*head, b);
      }
      predicted.push_back(cosine_similarity(a, b));
      gold.push_back(row.gold);
    } catch (const DataError&) {
      ++skipped;
    }
  }
  if (predicted.size() < 3) {
    throw DataError("STS evaluation needs at least 3 encodable rows, got " +
                    std::to_string(predicted.size()));
  }
  EvalResult r;
  try {
    r = pearson(predicted, gold);
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("STS evaluation: ") + e.what());
  }
  r.skipped = skipped;
  return r;
}

EvalResult sts_eval(const TextEncoder& encoder, const ProjectionHead* head,
                    const std::filesystem::path& benchmark_path) {
  const auto rows = load_sts(benchmark_path);
  return sts_eval(encoder, head, rows);
}

FinetuneReport finetune_experiment(std::span<const ParallelPair> pairs, const TextEncoder& encoder,
                                   const TrainConfig& config) {
  std::vector<ParallelPair> usable;
  for (const auto& p : pairs) {
    try {
      if (!encoder.encode(normalize_text(p.raw_text)).is_sentinel() &&
          !encoder.encode(normalize_text(p.curated_text)).is_sentinel()) {
        usable.push_back(p);
      }
    } catch (const DataError&) {
    }
  }
  auto train = train_head(usable, encoder, config);
  train.skipped_pairs = pairs.size() - usable.size();

  std::vector<std::string> raw;
  std::vector<std::string> curated;
  for (const auto& p : usable) {
    raw.push_back(p.raw_text);
    curated.push_back(p.curated_text);
  }
  auto pre = similarity_matrix(encoder, nullptr, raw, curated);
  auto post = similarity_matrix(encoder, &train.head, raw, curated);
  auto uplift = uplift_report(pre, post);
  return {std::move(train), std::move(pre), std::move(post), std::move(uplift)};
}

std::string format_matrix(const SimilarityMatrix& m) {
  std::string out = "     ";
  char buf[32];
  for (std::size_t j = 0; j < m.cols; ++j) {
    std::snprintf(buf, sizeof buf, "%10zu", j);
    out += buf;
  }
  out += '\n';
  for (std::size_t i = 0; i < m.rows; ++i) {
    std::snprintf(buf, sizeof buf, "%5zu", i);
    out += buf;
    for (std::size_t j = 0; j < m.cols; ++j) {
      std::snprintf(buf, sizeof buf, "%10.6f", m.at(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string matrix_to_json(const SimilarityMatrix& m) {
  nlohmann::ordered_json values = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    values.push_back(std::vector<double>(
        m.values.begin() + static_cast<std::ptrdiff_t>(i * m.cols),
        m.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * m.cols)));
  }
  return nlohmann::ordered_json{{"rows", m.rows},
                                {"cols", m.cols},
                                {"row_labels", m.row_labels},
                                {"column_labels", m.column_labels},
                                {"values", std::move(values)}}
      .dump();
}

std::string uplift_to_json(const UpliftStats& s) {
  nlohmann::ordered_json obj{{"mean_diag_pre", s.mean_diag_pre},
                             {"mean_diag_post", s.mean_diag_post},
                             {"diag_uplift", s.diag_uplift}};
  obj["mean_offdiag_pre"] = s.mean_offdiag_pre ? nlohmann::ordered_json(*s.mean_offdiag_pre) : nullptr;
  obj["mean_offdiag_post"] =
      s.mean_offdiag_post ? nlohmann::ordered_json(*s.mean_offdiag_post) : nullptr;
  return obj.dump();
}

}  // namespace riskdisc
