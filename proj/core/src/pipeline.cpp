#include "riskdisc/pipeline.hpp"

#include "riskdisc/corpus.hpp"
#include "riskdisc/error.hpp"
#include "riskdisc/hash.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <unordered_set>

namespace riskdisc {

namespace fs = std::filesystem;

namespace detail {
extern const std::string_view kEnglishStopwords;
}

namespace {

// Exclusive lock on an output directory for the lifetime of the object.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".riskdisc.lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw DataError("output directory " + dir.string() +
                      " is locked by another pipeline run (remove " + path_.string() +
                      " if stale)");
    }
  }
  ~DirectoryLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename F>
auto run_stage(const char* stage, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what());
  }
}

void write_pointer(const fs::path& output_dir, const std::string& id) {
  const auto tmp = output_dir / (std::string(kLatestPointer) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << id << '\n';
    if (!out.flush()) throw DataError("cannot write " + tmp.string());
  }
  fs::rename(tmp, output_dir / kLatestPointer);
}

using json = nlohmann::json;

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void reject_unknown(const json& section, const char* name, std::initializer_list<const char*> keys) {
  if (!section.is_object()) throw DataError(std::string("config section \"") + name + "\" must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : section.items()) {
    if (!allowed.contains(key)) {
      throw DataError(std::string("unknown config key \"") + name + "." + key + "\"");
    }
  }
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::string_view text, const fs::path& base_dir) {
  PipelineConfig c;
  try {
    const auto doc = json::parse(text);
    reject_unknown(doc, "<root>", {"paths", "params", "api", "finetune"});

    const auto paths = doc.value("paths", json::object());
    reject_unknown(paths, "paths",
                   {"projects", "raw_risks", "curated_risks", "vectors", "encodings", "stopwords",
                    "output_dir", "parallel_corpus", "sts_benchmark"});
    auto req = [&](const char* key) {
      if (!paths.contains(key) || !paths[key].is_string()) {
        throw DataError(std::string("config is missing paths.") + key);
      }
      return resolve(base_dir, paths[key].get<std::string>());
    };
    auto opt = [&](const char* key) -> std::optional<fs::path> {
      if (!paths.contains(key) || paths[key].is_null()) return std::nullopt;
      return resolve(base_dir, paths[key].get<std::string>());
    };
    c.paths.projects = req("projects");
    c.paths.raw_risks = req("raw_risks");
    c.paths.curated_risks = req("curated_risks");
    c.paths.vectors = req("vectors");
    c.paths.output_dir = req("output_dir");
    c.paths.encodings = opt("encodings");
    c.paths.stopwords = opt("stopwords");
    c.paths.parallel_corpus = opt("parallel_corpus");
    c.paths.sts_benchmark = opt("sts_benchmark");

    const auto params = doc.value("params", json::object());
    reject_unknown(params, "params",
                   {"k", "floor", "threshold", "dedup_threshold", "nmin", "nmax", "bucket_count",
                    "seed", "max_phrase_len", "pooling"});
    auto& rp = c.params.recommend;
    rp.k = params.value("k", rp.k);
    rp.floor = params.value("floor", rp.floor);
    rp.threshold = params.value("threshold", rp.threshold);
    rp.dedup_threshold = params.value("dedup_threshold", rp.threshold);
    auto& sp = c.params.subword;
    sp.nmin = params.value("nmin", sp.nmin);
    sp.nmax = params.value("nmax", sp.nmax);
    sp.bucket_count = params.value("bucket_count", sp.bucket_count);
    sp.seed = params.value("seed", sp.seed);
    auto& pp = c.params.profile;
    pp.max_phrase_len = params.value("max_phrase_len", pp.max_phrase_len);
    const auto pooling = params.value("pooling", std::string("score_weighted"));
    if (pooling == "mean") {
      pp.pooling = Pooling::mean;
    } else if (pooling != "score_weighted") {
      throw DataError("params.pooling must be \"score_weighted\" or \"mean\"");
    }

    const auto api = doc.value("api", json::object());
    reject_unknown(api, "api", {"bind", "port", "api_key", "poll_ms"});
    c.api.bind = api.value("bind", c.api.bind);
    c.api.port = api.value("port", c.api.port);
    c.api.api_key = api.value("api_key", c.api.api_key);
    c.api.poll_ms = api.value("poll_ms", c.api.poll_ms);

    const auto ft = doc.value("finetune", json::object());
    reject_unknown(ft, "finetune",
                   {"learning_rate", "epochs", "dropout_rate", "l2_lambda", "negative_weight", "seed"});
    auto& t = c.finetune;
    t.learning_rate = ft.value("learning_rate", t.learning_rate);
    t.epochs = ft.value("epochs", t.epochs);
    t.dropout_rate = ft.value("dropout_rate", t.dropout_rate);
    t.l2_lambda = ft.value("l2_lambda", t.l2_lambda);
    t.negative_weight = ft.value("negative_weight", t.negative_weight);
    t.seed = ft.value("seed", t.seed);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  return parse(read_file(path), fs::absolute(path).parent_path());
}

void PipelineConfig::validate() const {
  params.recommend.validate();
  params.subword.validate();
  if (params.profile.max_phrase_len == 0) throw InvalidArgument("max_phrase_len must be positive");
  finetune.validate();
}

StopwordList load_stopwords(const PipelineConfig& config) {
  if (config.paths.stopwords) return StopwordList::load(*config.paths.stopwords);
  return StopwordList::english();
}

std::shared_ptr<const TextEncoder> make_encoder(const PipelineConfig& config,
                                                std::shared_ptr<const EmbeddingTable> table,
                                                const StopwordList& stopwords) {
  std::shared_ptr<const TextEncoder> inner;
  if (config.paths.encodings) {
    inner = std::make_shared<PrecomputedEncoder>(PrecomputedEncoder::load(*config.paths.encodings));
  } else {
    inner = std::make_shared<SubwordBaselineEncoder>(std::move(table), stopwords);
  }
  return std::make_shared<CachingEncoder>(std::move(inner));
}

std::shared_ptr<const TextEncoder> load_encoder(const PipelineConfig& config) {
  const auto stopwords = load_stopwords(config);
  std::shared_ptr<const EmbeddingTable> table;
  if (!config.paths.encodings) {
    table = std::make_shared<const EmbeddingTable>(
        EmbeddingTable::load(config.paths.vectors, config.params.subword));
  }
  return make_encoder(config, std::move(table), stopwords);
}

std::string compute_snapshot_id(const PipelineConfig& config) {
  Sha256 h;
  auto add = [&](std::string_view label, std::string_view bytes) {
    h.update(label);
    h.update("\n" + std::to_string(bytes.size()) + "\n");
    h.update(bytes);
  };
  add("riskdisc-snapshot", "v1");
  add("projects", read_file(config.paths.projects));
  add("raw_risks", read_file(config.paths.raw_risks));
  add("curated_risks", read_file(config.paths.curated_risks));
  add("vectors", read_file(config.paths.vectors));
  add("encodings", config.paths.encodings ? read_file(*config.paths.encodings) : std::string());
  add("stopwords", config.paths.stopwords ? read_file(*config.paths.stopwords)
                                          : std::string(detail::kEnglishStopwords));
  add("params", params_to_json(config.params));
  return h.hex_digest();
}

Snapshot run_pipeline(const PipelineConfig& config) {
  config.validate();
  const auto& out_dir = config.paths.output_dir;
  fs::create_directories(out_dir / kSnapshotsDir);
  DirectoryLock lock(out_dir);

  const auto id = run_stage("ingest", [&] { return compute_snapshot_id(config); });
  const auto final_dir = out_dir / kSnapshotsDir / id;
  if (fs::is_directory(final_dir)) {
    auto existing = read_snapshot(final_dir);
    write_pointer(out_dir, id);
    return existing;
  }

  struct Inputs {
    std::vector<ProjectRecord> projects;
    std::vector<RawRisk> raw;
    std::vector<CuratedRisk> curated;
    std::shared_ptr<const EmbeddingTable> table;
    StopwordList stopwords;
    std::shared_ptr<const TextEncoder> encoder;
  };
  auto in = run_stage("ingest", [&] {
    auto stopwords = load_stopwords(config);
    auto table = std::make_shared<const EmbeddingTable>(
        EmbeddingTable::load(config.paths.vectors, config.params.subword));
    auto encoder = make_encoder(config, table, stopwords);
    return Inputs{load_projects(config.paths.projects), load_raw_risks(config.paths.raw_risks),
                  load_curated_risks(config.paths.curated_risks), std::move(table),
                  std::move(stopwords), std::move(encoder)};
  });

  Snapshot snap;
  snap.snapshot_id = id;
  snap.created_at = utc_now();
  snap.encoder_id = in.encoder->id();
  snap.params = config.params;
  snap.raw_risk_count = in.raw.size();
  snap.curated_risk_count = in.curated.size();

  std::unordered_set<std::string> known;
  for (const auto& p : in.projects) {
    known.insert(p.id);
    snap.project_ids.push_back(p.id);
  }
  for (const auto& r : in.raw) {
    if (!known.contains(r.project_id)) {
      snap.warnings.push_back("raw risk " + r.risk_id + " refers to unknown project " + r.project_id);
    }
  }
  if (in.curated.empty()) snap.warnings.emplace_back(kWarningNoCuratedRisks);

  snap.profiles = run_stage("profiles", [&] {
    std::vector<ProjectProfile> profiles;
    profiles.reserve(in.projects.size());
    for (const auto& p : in.projects) {
      profiles.push_back(build_profile(p, *in.table, in.stopwords, config.params.profile));
    }
    return profiles;
  });

  run_stage("similarity", [&] {
    const auto rankings = rank_all(snap.profiles);
    for (std::size_t i = 0; i < snap.profiles.size(); ++i) {
      const auto& pid = snap.profiles[i].id;
      snap.similar[pid] =
          truncate_ranking(rankings[i], config.params.recommend.k, config.params.recommend.floor);
      snap.rankings[pid] = rankings[i];
    }
    return 0;
  });

  run_stage("recommend", [&] {
    for (const auto& pid : snap.project_ids) {
      snap.reports.emplace(pid, recommend_from_similar(pid, snap.similar.at(pid), in.raw, in.curated,
                                                       *in.encoder, config.params.recommend));
    }
    return 0;
  });

  run_stage("backlog", [&] {
    const auto result =
        match_risks(in.raw, in.curated, *in.encoder, config.params.recommend.threshold);
    snap.matches = result.matches;
    for (const auto& issue : result.skipped) {
      snap.warnings.push_back(
          std::string(issue.side == EncodingIssue::Side::raw ? "raw" : "curated") + " risk " +
          issue.id + " not encoded: " + issue.reason);
    }
    snap.backlog =
        unmatched_backlog(in.raw, in.curated, *in.encoder, config.params.recommend.threshold);
    return 0;
  });

  run_stage("persist", [&] {
    const auto tmp = out_dir / kSnapshotsDir / (".tmp-" + id + "-" + std::to_string(::getpid()));
    try {
      fs::remove_all(tmp);
      fs::create_directories(tmp);
      write_snapshot(snap, tmp);
      fs::rename(tmp, final_dir);
    } catch (...) {
      std::error_code ec;
      fs::remove_all(tmp, ec);
      throw;
    }
    write_pointer(out_dir, id);
    return 0;
  });
  return snap;
}

}  // namespace riskdisc
