#include "riskdisc/snapshot.hpp"

#include "riskdisc/corpus.hpp"
#include "riskdisc/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace riskdisc {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json params_object(const PipelineParams& p) {
  return ordered_json{
      {"k", p.recommend.k},
      {"floor", p.recommend.floor},
      {"threshold", p.recommend.threshold},
      {"dedup_threshold", p.recommend.dedup_threshold},
      {"nmin", p.subword.nmin},
      {"nmax", p.subword.nmax},
      {"bucket_count", p.subword.bucket_count},
      {"seed", p.subword.seed},
      {"max_phrase_len", p.profile.max_phrase_len},
      {"pooling", p.profile.pooling == Pooling::mean ? "mean" : "score_weighted"},
  };
}

void write_text(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << contents;
  if (!out.flush()) throw DataError("write failed for " + path.string());
}

template <typename F>
void for_each_line(const fs::path& path, F&& on_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("snapshot file missing: " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) on_line(line);
  }
}

ordered_json matches_array(std::span<const ProjectMatch> ms) {
  ordered_json arr = ordered_json::array();
  for (const auto& m : ms) arr.push_back({{"id", m.id}, {"score", m.score}});
  return arr;
}

std::vector<ProjectMatch> parse_matches(const nlohmann::json& arr) {
  std::vector<ProjectMatch> out;
  for (const auto& m : arr) out.push_back({m.at("id").get<std::string>(), m.at("score").get<double>()});
  return out;
}

}  // namespace

std::string params_to_json(const PipelineParams& params) { return params_object(params).dump(); }

PipelineParams params_from_json(std::string_view json) {
  const auto o = nlohmann::json::parse(json);
  PipelineParams p;
  p.recommend.k = o.at("k").get<std::size_t>();
  p.recommend.floor = o.at("floor").get<double>();
  p.recommend.threshold = o.at("threshold").get<double>();
  p.recommend.dedup_threshold = o.at("dedup_threshold").get<double>();
  p.subword.nmin = o.at("nmin").get<std::size_t>();
  p.subword.nmax = o.at("nmax").get<std::size_t>();
  p.subword.bucket_count = o.at("bucket_count").get<std::size_t>();
  p.subword.seed = o.at("seed").get<std::uint64_t>();
  p.profile.max_phrase_len = o.at("max_phrase_len").get<std::size_t>();
  p.profile.pooling = o.at("pooling").get<std::string>() == "mean" ? Pooling::mean
                                                                     : Pooling::score_weighted;
  return p;
}

const RecommendationReport& Snapshot::report(const std::string& project_id) const {
  const auto it = reports.find(project_id);
  if (it == reports.end()) throw NotFound("unknown project \"" + project_id + "\"");
  return it->second;
}

std::string Snapshot::metadata_json() const {
  return ordered_json{{"snapshot_id", snapshot_id},
                      {"created_at", created_at},
                      {"encoder", encoder_id},
                      {"params", params_object(params)},
                      {"counts",
                       {{"projects", project_ids.size()},
                        {"raw_risks", raw_risk_count},
                        {"curated_risks", curated_risk_count},
                        {"matches", matches.size()},
                        {"backlog", backlog.size()}}},
                      {"warnings", warnings}}
      .dump();
}

void write_snapshot(const Snapshot& s, const fs::path& dir) {
  write_text(dir / kSnapshotMetaFile, s.metadata_json() + "\n");

  std::string profiles;
  for (const auto& p : s.profiles) {
    ordered_json phrases = ordered_json::array();
    for (const auto& ph : p.phrases) phrases.push_back({{"phrase", ph.phrase}, {"score", ph.score}});
    const auto comps = p.vector.components();
    profiles += ordered_json{{"id", p.id},
                             {"phrases", std::move(phrases)},
                             {"vector", std::vector<double>(comps.begin(), comps.end())}}
                    .dump();
    profiles += '\n';
  }
  write_text(dir / kProfilesFile, profiles);

  std::string rankings;
  std::string similar;
  std::string reports;
  for (const auto& id : s.project_ids) {
    rankings += ordered_json{{"id", id}, {"ranking", matches_array(s.rankings.at(id))}}.dump() + "\n";
    similar += similar_to_json(id, s.similar.at(id)) + "\n";
    reports += report_to_json(s.reports.at(id)) + "\n";
  }
  write_text(dir / kRankingsFile, rankings);
  write_text(dir / kSimilarFile, similar);
  write_text(dir / kReportsFile, reports);

  std::string matches;
  for (const auto& m : s.matches) {
    matches += ordered_json{{"raw_risk_id", m.raw_risk_id},
                            {"curated_id", m.curated_id},
                            {"similarity", m.similarity}}
                   .dump() +
               "\n";
  }
  write_text(dir / kMatchesFile, matches);

  std::string backlog;
  for (const auto& b : s.backlog) backlog += backlog_entry_to_json(b) + "\n";
  write_text(dir / kBacklogFile, backlog);
}

Snapshot read_snapshot(const fs::path& dir) {
  Snapshot s;
  try {
    const auto meta = nlohmann::json::parse(read_file(dir / kSnapshotMetaFile));
    s.snapshot_id = meta.at("snapshot_id").get<std::string>();
    s.created_at = meta.at("created_at").get<std::string>();
    s.encoder_id = meta.at("encoder").get<std::string>();
    s.params = params_from_json(meta.at("params").dump());
    s.warnings = meta.at("warnings").get<std::vector<std::string>>();
    s.raw_risk_count = meta.at("counts").at("raw_risks").get<std::size_t>();
    s.curated_risk_count = meta.at("counts").at("curated_risks").get<std::size_t>();

    for_each_line(dir / kProfilesFile, [&](const std::string& line) {
      const auto o = nlohmann::json::parse(line);
      ProjectProfile p;
      p.id = o.at("id").get<std::string>();
      for (const auto& ph : o.at("phrases")) {
        ScoredPhrase sp;
        sp.phrase = ph.at("phrase").get<std::string>();
        sp.score = ph.at("score").get<double>();
        std::istringstream words(sp.phrase);
        for (std::string w; words >> w;) sp.words.push_back(w);
        p.phrases.push_back(std::move(sp));
      }
      p.vector = UnitVector::normalize(o.at("vector").get<std::vector<double>>());
      s.project_ids.push_back(p.id);
      s.profiles.push_back(std::move(p));
    });
    for_each_line(dir / kRankingsFile, [&](const std::string& line) {
      const auto o = nlohmann::json::parse(line);
      s.rankings[o.at("id").get<std::string>()] = parse_matches(o.at("ranking"));
    });
    for_each_line(dir / kSimilarFile, [&](const std::string& line) {
      const auto o = nlohmann::json::parse(line);
      s.similar[o.at("id").get<std::string>()] = parse_matches(o.at("similar"));
    });
    for_each_line(dir / kReportsFile, [&](const std::string& line) {
      auto r = report_from_json(line);
      auto id = r.project_id;
      s.reports.emplace(std::move(id), std::move(r));
    });
    for_each_line(dir / kMatchesFile, [&](const std::string& line) {
      const auto o = nlohmann::json::parse(line);
      s.matches.push_back({o.at("raw_risk_id").get<std::string>(),
                           o.at("curated_id").get<std::string>(),
                           o.at("similarity").get<double>()});
    });
    for_each_line(dir / kBacklogFile, [&](const std::string& line) {
      const auto o = nlohmann::json::parse(line);
      BacklogEntry b;
      b.risk = {o.at("risk_id").get<std::string>(), o.at("project_id").get<std::string>(),
                o.at("text").get<std::string>()};
      if (!o.at("best_similarity").is_null()) b.best_similarity = o["best_similarity"].get<double>();
      if (!o.at("best_curated_id").is_null()) b.best_curated_id = o["best_curated_id"].get<std::string>();
      s.backlog.push_back(std::move(b));
    });
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt snapshot in " + dir.string() + ": " + e.what());
  }
  for (const auto& id : s.project_ids) {
    if (!s.reports.contains(id) || !s.similar.contains(id) || !s.rankings.contains(id)) {
      throw DataError("corrupt snapshot in " + dir.string() + ": incomplete data for " + id);
    }
  }
  return s;
}

std::optional<fs::path> latest_snapshot_dir(const fs::path& output_dir) {
  const auto pointer = output_dir / kLatestPointer;
  std::ifstream in(pointer);
  if (!in) return std::nullopt;
  std::string id;
  std::getline(in, id);
  if (id.empty()) return std::nullopt;
  const auto dir = output_dir / kSnapshotsDir / id;
  if (!fs::is_directory(dir)) return std::nullopt;
  return dir;
}

Snapshot load_latest_snapshot(const fs::path& output_dir) {
  const auto dir = latest_snapshot_dir(output_dir);
  if (!dir) throw NotFound("no snapshot found under " + output_dir.string());
  return read_snapshot(*dir);
}

RecommendationReport filter_report(const Snapshot& snapshot, const RecommendationReport& report,
                                   double threshold) {
  if (!(threshold <= 1.0) || threshold < snapshot.params.recommend.threshold) {
    throw InvalidArgument("threshold must lie in [" +
                          std::to_string(snapshot.params.recommend.threshold) +
                          ", 1] for this snapshot");
  }
  std::map<std::pair<std::string, std::string>, double> sim;
  for (const auto& m : snapshot.matches) sim[{m.raw_risk_id, m.curated_id}] = m.similarity;

  RecommendationReport out = report;
  out.risks.clear();
  for (const auto& g : report.risks) {
    if (g.best_similarity < threshold) continue;
    RiskGroup kept = g;
    kept.sources.clear();
    for (const auto& src : g.sources) {
      const auto it = sim.find({src, g.curated.curated_id});
      if (it != sim.end() && it->second >= threshold) kept.sources.push_back(src);
    }
    out.risks.push_back(std::move(kept));
  }
  return out;
}

}  // namespace riskdisc
