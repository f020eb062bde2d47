#include "cli/cli.hpp"

#include <riskdisc/corpus.hpp>
#include <riskdisc/error.hpp>
#include <riskdisc/pipeline.hpp>
#include <riskdisc/service.hpp>
#include <riskdisc/siamese.hpp>
#include <riskdisc/snapshot.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <pthread.h>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <thread>

namespace riskdisc::cli {

namespace fs = std::filesystem;

namespace {

enum class Format { table, json };

struct Options {
  std::string config_path;
  std::string project_id;
  std::string format = "table";

  std::string output_dir;
  std::size_t k = 0;
  double floor = 0.0;
  double threshold = 0.0;
  double dedup_threshold = 0.0;

  std::string parallel;
  std::string benchmark;
  std::string head_path;
  std::string out_dir;
  std::size_t epochs = 0;
  double learning_rate = 0.0;
  double dropout = 0.0;
  double l2 = 0.0;
  std::uint64_t seed = 0;

  std::string bind;
  int port = 0;
  std::string api_key;
};

// Options registered on a subcommand whose presence overrides config keys.
struct Overrides {
  std::vector<CLI::Option*> output_dir;  // one per subcommand
  CLI::Option* k = nullptr;
  CLI::Option* floor = nullptr;
  CLI::Option* threshold = nullptr;
  CLI::Option* dedup_threshold = nullptr;
  CLI::Option* epochs = nullptr;
  CLI::Option* learning_rate = nullptr;
  CLI::Option* dropout = nullptr;
  CLI::Option* l2 = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* bind = nullptr;
  CLI::Option* port = nullptr;
  CLI::Option* api_key = nullptr;
};

bool given(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }
bool given(const std::vector<CLI::Option*>& opts) {
  return std::any_of(opts.begin(), opts.end(), [](const CLI::Option* o) { return given(o); });
}

PipelineConfig load_config(const Options& o, const Overrides& ov) {
  auto c = PipelineConfig::load(o.config_path);
  if (given(ov.output_dir)) c.paths.output_dir = o.output_dir;
  if (given(ov.k)) c.params.recommend.k = o.k;
  if (given(ov.floor)) c.params.recommend.floor = o.floor;
  if (given(ov.threshold)) c.params.recommend.threshold = o.threshold;
  if (given(ov.dedup_threshold)) c.params.recommend.dedup_threshold = o.dedup_threshold;
  if (given(ov.epochs)) c.finetune.epochs = o.epochs;
  if (given(ov.learning_rate)) c.finetune.learning_rate = o.learning_rate;
  if (given(ov.dropout)) c.finetune.dropout_rate = o.dropout;
  if (given(ov.l2)) c.finetune.l2_lambda = o.l2;
  if (given(ov.seed)) c.finetune.seed = o.seed;
  if (given(ov.bind)) c.api.bind = o.bind;
  if (given(ov.port)) c.api.port = o.port;
  if (given(ov.api_key)) c.api.api_key = o.api_key;
  c.validate();
  return c;
}

Format parse_format(const std::string& s) { return s == "json" ? Format::json : Format::table; }

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << contents;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void print_similar(std::ostream& out, const std::string& id, std::span<const ProjectMatch> similar,
                   Format format) {
  if (format == Format::json) {
    out << similar_to_json(id, similar) << '\n';
    return;
  }
  out << "similar projects for " << id << "\n";
  if (similar.empty()) {
    out << "  (none above floor)\n";
    return;
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-6s %-24s %s\n", "rank", "id", "score");
  out << buf;
  for (std::size_t i = 0; i < similar.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-6zu %-24s %s\n", i + 1, similar[i].id.c_str(),
                  fixed6(similar[i].score).c_str());
    out << buf;
  }
}

void print_report(std::ostream& out, const RecommendationReport& r, Format format) {
  if (format == Format::json) {
    out << report_to_json(r) << '\n';
    return;
  }
  out << "risk recommendations for " << r.project_id << " (" << r.similar_projects.size()
      << " similar projects)\n";
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  if (r.risks.empty()) {
    out << "  (no curated risks matched)\n";
    return;
  }
  for (std::size_t i = 0; i < r.risks.size(); ++i) {
    const auto& g = r.risks[i];
    out << i + 1 << ". [" << g.curated.curated_id << "] " << g.curated.risk_text << "\n"
        << "   similarity " << fixed6(g.best_similarity) << ", from";
    for (const auto& s : g.sources) out << ' ' << s;
    out << "\n   mitigation: " << g.curated.mitigation_text << '\n';
  }
}

int cmd_index(const Options& o, const Overrides& ov, std::ostream& out) {
  const auto config = load_config(o, ov);
  const auto snap = run_pipeline(config);
  out << "snapshot " << snap.snapshot_id << "\n"
      << "  projects " << snap.project_ids.size() << ", raw risks " << snap.raw_risk_count
      << ", curated risks " << snap.curated_risk_count << "\n"
      << "  matches " << snap.matches.size() << ", backlog " << snap.backlog.size() << "\n"
      << "  written to " << (config.paths.output_dir / kSnapshotsDir / snap.snapshot_id).string()
      << "\n";
  for (const auto& w : snap.warnings) out << "warning: " << w << '\n';
  return kOk;
}

int cmd_similar(const Options& o, const Overrides& ov, const CLI::Option* k_opt,
                const CLI::Option* floor_opt, std::ostream& out) {
  const auto config = load_config(o, ov);
  const auto snap = load_latest_snapshot(config.paths.output_dir);
  const auto it = snap.rankings.find(o.project_id);
  if (it == snap.rankings.end()) throw NotFound("unknown project \"" + o.project_id + "\"");
  const std::size_t k = given(k_opt) ? o.k : snap.params.recommend.k;
  const double floor = given(floor_opt) ? o.floor : snap.params.recommend.floor;
  print_similar(out, o.project_id, truncate_ranking(it->second, k, floor), parse_format(o.format));
  return kOk;
}

int cmd_risks(const Options& o, const Overrides& ov, const CLI::Option* threshold_opt,
              std::ostream& out) {
  const auto config = load_config(o, ov);
  const auto snap = load_latest_snapshot(config.paths.output_dir);
  const auto& report = snap.report(o.project_id);
  print_report(out, given(threshold_opt) ? filter_report(snap, report, o.threshold) : report,
               parse_format(o.format));
  return kOk;
}

int cmd_backlog(const Options& o, const Overrides& ov, std::ostream& out) {
  const auto config = load_config(o, ov);
  const auto snap = load_latest_snapshot(config.paths.output_dir);
  if (parse_format(o.format) == Format::json) {
    for (const auto& b : snap.backlog) out << backlog_entry_to_json(b) << '\n';
    return kOk;
  }
  out << snap.backlog.size() << " raw risks without a curated match (threshold "
      << fixed6(snap.params.recommend.threshold) << ")\n";
  for (const auto& b : snap.backlog) {
    out << "  " << b.risk.risk_id << " [" << b.risk.project_id << "] " << b.risk.text;
    if (b.best_curated_id) {
      out << "  (closest " << *b.best_curated_id << " at " << fixed6(*b.best_similarity) << ")";
    }
    out << '\n';
  }
  return kOk;
}

int cmd_finetune(const Options& o, const Overrides& ov, std::ostream& out) {
  const auto config = load_config(o, ov);
  fs::path corpus_path;
  if (!o.parallel.empty()) {
    corpus_path = o.parallel;
  } else if (config.paths.parallel_corpus) {
    corpus_path = *config.paths.parallel_corpus;
  } else {
    throw InvalidArgument("no parallel corpus: pass --parallel or set paths.parallel_corpus");
  }
  const fs::path out_dir = o.out_dir.empty() ? config.paths.output_dir / "finetune" : fs::path(o.out_dir);

  const auto pairs = load_parallel_corpus(corpus_path);
  const auto encoder = load_encoder(config);
  const auto report = finetune_experiment(pairs, *encoder, config.finetune);

  fs::create_directories(out_dir);
  write_file(out_dir / "head.json", report.train.head.to_json() + "\n");
  write_file(out_dir / "loss_history.json", nlohmann::json(report.train.loss_history).dump() + "\n");
  write_file(out_dir / "pre_matrix.json", matrix_to_json(report.pre) + "\n");
  write_file(out_dir / "post_matrix.json", matrix_to_json(report.post) + "\n");
  write_file(out_dir / "pre_matrix.txt", format_matrix(report.pre));
  write_file(out_dir / "post_matrix.txt", format_matrix(report.post));
  write_file(out_dir / "uplift.json", uplift_to_json(report.uplift) + "\n");

  if (parse_format(o.format) == Format::json) {
    out << uplift_to_json(report.uplift) << '\n';
    return kOk;
  }
  const auto& u = report.uplift;
  out << "trained on " << report.pre.rows << " pairs (" << report.train.skipped_pairs
      << " skipped), " << report.train.loss_history.size() << " epochs\n"
      << "loss " << fixed6(report.train.loss_history.front()) << " -> "
      << fixed6(report.train.loss_history.back()) << "\n"
      << "pre fine-tuning similarities\n" << format_matrix(report.pre)
      << "post fine-tuning similarities\n" << format_matrix(report.post)
      << "mean diagonal " << fixed6(u.mean_diag_pre) << " -> " << fixed6(u.mean_diag_post) << "\n";
  if (u.mean_offdiag_pre) {
    out << "mean off-diagonal " << fixed6(*u.mean_offdiag_pre) << " -> "
        << fixed6(*u.mean_offdiag_post) << "\n";
  }
  out << "artifacts in " << out_dir.string() << "\n";
  return kOk;
}

int cmd_eval_sts(const Options& o, const Overrides& ov, std::ostream& out) {
  const auto config = load_config(o, ov);
  fs::path bench;
  if (!o.benchmark.empty()) {
    bench = o.benchmark;
  } else if (config.paths.sts_benchmark) {
    bench = *config.paths.sts_benchmark;
  } else {
    throw InvalidArgument("no STS benchmark: pass --benchmark or set paths.sts_benchmark");
  }
  std::optional<ProjectionHead> head;
  if (!o.head_path.empty()) head = ProjectionHead::from_json(read_file(o.head_path));
  const auto encoder = load_encoder(config);
  const auto r = sts_eval(*encoder, head ? &*head : nullptr, bench);
  if (parse_format(o.format) == Format::json) {
    out << nlohmann::ordered_json{{"r", r.r}, {"t_stat", r.t_stat}, {"n", r.n}, {"skipped", r.skipped}}
               .dump()
        << '\n';
    return kOk;
  }
  out << "pearson r " << fixed6(r.r) << "\n"
      << "t statistic " << fixed6(r.t_stat) << "\n"
      << "rows used " << r.n << ", skipped " << r.skipped << "\n";
  return kOk;
}

int cmd_serve(const Options& o, const Overrides& ov, std::ostream& out) {
  const auto config = load_config(o, ov);
  SnapshotService service(config.paths.output_dir, config.api);

  // SIGINT/SIGTERM go to a waiter thread instead of a handler, so stopping
  // the server never runs in signal context.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });

  out << "serving snapshot " << service.current()->snapshot_id << " on " << config.api.bind << ":"
      << config.api.port << std::endl;
  try {
    service.run();
  } catch (...) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    throw;
  }
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"riskdisc - discover risks from similar projects"};
  app.name("riskdisc");
  app.set_version_flag("--version", std::string(RISKDISC_VERSION));
  app.require_subcommand(1);

  Options o;
  Overrides ov;

  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "pipeline config (JSON)")
        ->envname("RISKDISC_CONFIG")
        ->required()
        ->check(CLI::ExistingFile);
  };
  auto with_format = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"table", "json"}));
  };
  auto with_output_dir = [&](CLI::App* sub) {
    ov.output_dir.push_back(sub->add_option("--output-dir", o.output_dir, "override paths.output_dir"));
  };

  auto* index = app.add_subcommand("index", "run the batch pipeline and write a snapshot");
  with_config(index);
  with_output_dir(index);
  ov.k = index->add_option("--k", o.k, "similar projects per project");
  ov.floor = index->add_option("--floor", o.floor, "minimum arc-cosine score");
  ov.threshold = index->add_option("--threshold", o.threshold, "risk match threshold");
  ov.dedup_threshold = index->add_option("--dedup-threshold", o.dedup_threshold, "duplicate threshold");

  auto* similar = app.add_subcommand("similar", "list similar projects from the latest snapshot");
  similar->add_option("id", o.project_id, "project id")->required();
  with_config(similar);
  with_output_dir(similar);
  with_format(similar);
  auto* similar_k = similar->add_option("--k", o.k, "number of results");
  auto* similar_floor = similar->add_option("--floor", o.floor, "minimum score");

  auto* risks = app.add_subcommand("risks", "show risk recommendations from the latest snapshot");
  risks->add_option("id", o.project_id, "project id")->required();
  with_config(risks);
  with_output_dir(risks);
  with_format(risks);
  auto* risks_threshold = risks->add_option("--threshold", o.threshold, "raise the match threshold");

  auto* backlog = app.add_subcommand("backlog", "list raw risks without a curated match");
  with_config(backlog);
  with_output_dir(backlog);
  with_format(backlog);

  auto* finetune = app.add_subcommand("finetune", "train a projection head on the parallel corpus");
  with_config(finetune);
  with_output_dir(finetune);
  with_format(finetune);
  finetune->add_option("--parallel", o.parallel, "parallel corpus (JSONL)")->check(CLI::ExistingFile);
  finetune->add_option("--out", o.out_dir, "artifact directory");
  ov.epochs = finetune->add_option("--epochs", o.epochs, "training epochs");
  ov.learning_rate = finetune->add_option("--lr", o.learning_rate, "learning rate");
  ov.dropout = finetune->add_option("--dropout", o.dropout, "input dropout rate");
  ov.l2 = finetune->add_option("--l2", o.l2, "weight of ||W - I||^2");
  ov.seed = finetune->add_option("--seed", o.seed, "training seed");

  auto* eval = app.add_subcommand("eval-sts", "Pearson correlation on an STS-style benchmark");
  with_config(eval);
  with_format(eval);
  eval->add_option("--benchmark", o.benchmark, "tab-separated benchmark")->check(CLI::ExistingFile);
  eval->add_option("--head", o.head_path, "projection head JSON")->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "serve the latest snapshot over HTTP");
  with_config(serve);
  with_output_dir(serve);
  ov.bind = serve->add_option("--bind", o.bind, "bind address");
  ov.port = serve->add_option("--port", o.port, "port");
  ov.api_key = serve->add_option("--api-key", o.api_key, "required X-Api-Key")->envname("RISKDISC_API_KEY");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*index) return cmd_index(o, ov, out);
    if (*similar) return cmd_similar(o, ov, similar_k, similar_floor, out);
    if (*risks) return cmd_risks(o, ov, risks_threshold, out);
    if (*backlog) return cmd_backlog(o, ov, out);
    if (*finetune) return cmd_finetune(o, ov, out);
    if (*eval) return cmd_eval_sts(o, ov, out);
    if (*serve) return cmd_serve(o, ov, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

}  // namespace riskdisc::cli
