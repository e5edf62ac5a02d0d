#pragma once

// Command-line front end. `run_cli` is the whole program; tools/sccl.cpp only forwards
// argv so the tests can drive commands in-process.
//
// Run config (JSON):
//   {
//     "data":      {"path": "train.jsonl", "format": "jsonl"},       one data source:
//     "synthetic": {"k": 4, "n_per_cluster": 100, "dim": 16,          data, synthetic or
//                   "separation": 2.0, "noise_sigma": 1.0,            synthetic_text
//                   "imbalance_ratio": 1.0, "seed": 0},
//     "synthetic_text": {"k": 4, "n_per_cluster": 50, ...},
//     "model":     {SCCLConfig keys},
//     "augment":   {"kind": "GaussianNoise", "strength": 0.2, "noise_sigma": 0.1},
//     "n_seeds": 1, "log_every": 50, "out": "runs/demo",
//     "histogram_bins": 20, "metric": "euclidean",
//     "sweep": {"strengths": [0.1, 0.2, 0.3]}
//   }
// Relative paths are resolved against the config file's directory. Without an
// "augment" block the dataset's precomputed aug1/aug2 pairs are used.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sccl/checkpoint.hpp"
#include "sccl/experiments.hpp"
#include "sccl/synthetic.hpp"
#include "sccl/trainer.hpp"

namespace sccl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum class LogLevel { Quiet = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

// SCCL_LOG_LEVEL = quiet | error | warn | info | debug (default info).
inline LogLevel log_level() {
  const char* env = std::getenv("SCCL_LOG_LEVEL");
  if (env == nullptr) return LogLevel::Info;
  const std::string s(env);
  if (s == "quiet") return LogLevel::Quiet;
  if (s == "error") return LogLevel::Error;
  if (s == "warn") return LogLevel::Warn;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

inline void log(LogLevel lvl, const std::string& msg) {
  if (static_cast<int>(lvl) <= static_cast<int>(log_level())) std::cerr << "sccl: " << msg << '\n';
}

struct SyntheticParams {
  std::size_t k = 4;
  std::size_t n_per_cluster = 100;
  std::size_t dim = 16;
  double separation = 2.0;
  double noise_sigma = 1.0;
  double imbalance_ratio = 1.0;
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::optional<fs::path> data_path;
  std::optional<DatasetFormat> data_format;
  std::optional<SyntheticParams> synthetic;
  std::optional<SyntheticTextSpec> synthetic_text;
  SCCLConfig model;
  std::optional<AugmentSpec> augment;
  std::size_t n_seeds = 1;
  fs::path out = "sccl_out";
  std::size_t histogram_bins = 20;
  DistanceMetric metric = DistanceMetric::Euclidean;
  std::vector<double> sweep_strengths;
};

namespace detail {

template <class F>
void for_keys(const json& j, const char* block, F&& f) {
  if (!j.is_object()) throw ConfigError(std::string("`") + block + "` must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!f(k, v)) throw ConfigError(std::string("unknown key `") + k + "` in `" + block + "`");
  }
}

inline SyntheticParams parse_synthetic(const json& j) {
  SyntheticParams p;
  for_keys(j, "synthetic", [&](const std::string& k, const json& v) {
    if (k == "k") p.k = v.get<std::size_t>();
    else if (k == "n_per_cluster") p.n_per_cluster = v.get<std::size_t>();
    else if (k == "dim") p.dim = v.get<std::size_t>();
    else if (k == "separation") p.separation = v.get<double>();
    else if (k == "noise_sigma") p.noise_sigma = v.get<double>();
    else if (k == "imbalance_ratio") p.imbalance_ratio = v.get<double>();
    else if (k == "seed") p.seed = v.get<std::uint64_t>();
    else return false;
    return true;
  });
  return p;
}

inline SyntheticTextSpec parse_synthetic_text(const json& j) {
  SyntheticTextSpec p;
  for_keys(j, "synthetic_text", [&](const std::string& k, const json& v) {
    if (k == "k") p.k = v.get<std::size_t>();
    else if (k == "n_per_cluster") p.n_per_cluster = v.get<std::size_t>();
    else if (k == "words_per_doc") p.words_per_doc = v.get<std::size_t>();
    else if (k == "topic_vocab") p.topic_vocab = v.get<std::size_t>();
    else if (k == "shared_vocab") p.shared_vocab = v.get<std::size_t>();
    else if (k == "topic_prob") p.topic_prob = v.get<double>();
    else if (k == "dim") p.dim = v.get<std::size_t>();
    else if (k == "seed") p.seed = v.get<std::uint64_t>();
    else return false;
    return true;
  });
  return p;
}

}  // namespace detail

inline RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  RunConfig rc;
  try {
    detail::for_keys(j, "config", [&](const std::string& k, const json& v) {
      if (k == "data") {
        detail::for_keys(v, "data", [&](const std::string& dk, const json& dv) {
          if (dk == "path") rc.data_path = base_dir / fs::path(dv.get<std::string>());
          else if (dk == "format") rc.data_format = parse_dataset_format(dv.get<std::string>());
          else return false;
          return true;
        });
        if (!rc.data_path) throw ConfigError("`data` block needs a `path`");
      } else if (k == "synthetic") rc.synthetic = detail::parse_synthetic(v);
      else if (k == "synthetic_text") rc.synthetic_text = detail::parse_synthetic_text(v);
      else if (k == "model") rc.model = config_from_json(v);
      else if (k == "augment") rc.augment = augment_spec_from_json(v);
      else if (k == "n_seeds") rc.n_seeds = v.get<std::size_t>();
      else if (k == "log_every") v.get<std::size_t>();  // applied after the model block
      else if (k == "out") rc.out = base_dir / fs::path(v.get<std::string>());
      else if (k == "histogram_bins") rc.histogram_bins = v.get<std::size_t>();
      else if (k == "metric") rc.metric = parse_distance_metric(v.get<std::string>());
      else if (k == "sweep") {
        detail::for_keys(v, "sweep", [&](const std::string& sk, const json& sv) {
          if (sk != "strengths") return false;
          rc.sweep_strengths = sv.get<std::vector<double>>();
          return true;
        });
      } else return false;
      return true;
    });
    // The top-level log_every wins over the model block's.
    if (j.contains("log_every")) rc.model.log_every = j.at("log_every").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const KindMismatchError& e) {
    throw ConfigError(e.what());
  }
  const int sources = int(rc.data_path.has_value()) + int(rc.synthetic.has_value()) + int(rc.synthetic_text.has_value());
  if (sources != 1) {
    throw ConfigError("config must name exactly one data source (`data`, `synthetic` or `synthetic_text`)");
  }
  if (rc.n_seeds == 0) throw ConfigError("n_seeds must be >= 1");
  if (rc.histogram_bins == 0) throw ConfigError("histogram_bins must be >= 1");
  rc.model.validate();
  return rc;
}

inline RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

inline Dataset load_data(const RunConfig& rc) {
  if (rc.synthetic) {
    const auto& s = *rc.synthetic;
    return make_synthetic(s.k, s.n_per_cluster, s.dim, s.separation, s.noise_sigma, s.imbalance_ratio, s.seed);
  }
  if (rc.synthetic_text) return make_synthetic_text(*rc.synthetic_text);
  return rc.data_format ? load_dataset(*rc.data_path, *rc.data_format) : load_dataset(*rc.data_path);
}

// ---- output helpers -------------------------------------------------------

inline std::string num(double v) { return std::isfinite(v) ? sccl::detail::format_double(v) : std::string(); }
inline std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }
inline json jnum(const std::optional<double>& v) { return v && std::isfinite(*v) ? json(*v) : json(nullptr); }

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string trace_csv(const TrainTrace& trace) {
  std::ostringstream s;
  s << "iter,loss_total,loss_cluster,loss_instance,acc,nmi,intra_true,inter_true,intra_pred,inter_pred\n";
  for (const auto& r : trace.records) {
    s << r.iter << ',' << num(r.loss_total) << ',' << num(r.loss_cluster) << ',' << num(r.loss_instance) << ','
      << num(r.acc) << ',' << num(r.nmi) << ',' << num(r.intra_true) << ',' << num(r.inter_true) << ','
      << num(r.intra_pred) << ',' << num(r.inter_pred) << '\n';
  }
  return s.str();
}

inline json metrics_json(const EmbeddingReport& rep, const SCCLConfig& c, std::size_t n) {
  return {{"acc", jnum(rep.acc)},
          {"nmi", jnum(rep.nmi)},
          {"mean_intra_true", jnum(rep.geometry_true ? std::optional(rep.geometry_true->mean_intra) : std::nullopt)},
          {"mean_inter_true", jnum(rep.geometry_true ? std::optional(rep.geometry_true->mean_inter) : std::nullopt)},
          {"mean_intra_pred", rep.geometry_pred.mean_intra},
          {"mean_inter_pred", rep.geometry_pred.mean_inter},
          {"k", c.n_clusters},
          {"n", n},
          {"seed", c.seed}};
}

inline json geometry_json(const ClusterGeometry& g) {
  return {{"intra", g.intra}, {"inter", g.inter}, {"mean_intra", g.mean_intra}, {"mean_inter", g.mean_inter}};
}

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string eta_on;
  std::string checkpoint;
  std::string data;
};

// Loads the run config and applies flag overrides. Without --config (diagnose and
// evaluate may run from --checkpoint and --data alone) a default config is used.
inline RunConfig resolve(const Options& o, bool needs_config) {
  RunConfig rc;
  if (!o.config.empty()) {
    rc = load_run_config(o.config);
  } else if (needs_config) {
    throw ConfigError("--config is required");
  }
  if (!o.data.empty()) {
    rc.data_path = fs::path(o.data);
    rc.data_format.reset();
    rc.synthetic.reset();
    rc.synthetic_text.reset();
  }
  if (o.seed) rc.model.seed = *o.seed;
  if (!o.eta_on.empty()) rc.model.eta_on = parse_eta_target(o.eta_on);
  if (!o.out.empty()) rc.out = o.out;
  if (!rc.data_path && !rc.synthetic && !rc.synthetic_text) throw ConfigError("no dataset: give --data or a config");
  return rc;
}

inline std::optional<Augmenter> augmenter_for(const RunConfig& rc, const Dataset& ds) {
  if (!rc.augment) return std::nullopt;
  return make_augmenter(*rc.augment, ds);
}

// ---- commands ---------------------------------------------------------------

inline int cmd_train(const Options& o) {
  const RunConfig rc = resolve(o, true);
  const Dataset ds = load_data(rc);
  fs::create_directories(rc.out);
  Trainer t(ds, rc.model, augmenter_for(rc, ds));
  log(LogLevel::Info, "train: " + std::to_string(ds.size()) + " instances, " + std::to_string(t.total_iters()) +
                          " iterations, mode " + std::string(to_string(rc.model.mode)));
  t.on_log([](const TraceRecord& r) {
    std::ostringstream s;
    s << "iter " << r.iter << " loss " << num(r.loss_total);
    if (r.acc) s << " acc " << num(r.acc) << " nmi " << num(r.nmi);
    log(LogLevel::Debug, s.str());
  });
  t.run();
  save_checkpoint(rc.out / "checkpoint.json", rc.model, t.params());
  write_text(rc.out / "trace.csv", trace_csv(t.trace()));
  const EmbeddingReport rep = evaluate_params(t.params(), ds, rc.model, rc.metric);
  write_json(rc.out / "metrics.json", metrics_json(rep, rc.model, ds.size()));
  if (rep.acc) log(LogLevel::Info, "final acc " + num(rep.acc) + " nmi " + num(rep.nmi));
  return 0;
}

inline int cmd_ablate(const Options& o) {
  const RunConfig rc = resolve(o, true);
  const Dataset ds = load_data(rc);
  if (!ds.has_labels()) throw ConfigError("ablate needs a labelled dataset");
  fs::create_directories(rc.out);
  log(LogLevel::Info, "ablate: 4 modes x " + std::to_string(rc.n_seeds) + " seeds");
  const auto rows = run_ablation(ds, rc.model, rc.augment, rc.n_seeds);
  json jrows = json::array();
  std::ostringstream csv;
  csv << "mode,acc_mean,acc_sd,nmi_mean,nmi_sd,n_seeds\n";
  for (const auto& r : rows) {
    json runs = json::array();
    for (const auto& run : r.runs) {
      runs.push_back({{"seed", run.seed},
                      {"acc", run.acc},
                      {"nmi", run.nmi},
                      {"intra_true_init", run.intra_init},
                      {"intra_true_final", run.intra_final},
                      {"inter_true_init", run.inter_init},
                      {"inter_true_final", run.inter_final}});
    }
    const std::string mode(to_string(r.mode));
    jrows.push_back({{"mode", mode},
                     {"acc_mean", r.acc.mean},
                     {"acc_sd", r.acc.sd},
                     {"nmi_mean", r.nmi.mean},
                     {"nmi_sd", r.nmi.sd},
                     {"runs", runs}});
    csv << mode << ',' << num(r.acc.mean) << ',' << num(r.acc.sd) << ',' << num(r.nmi.mean) << ','
        << num(r.nmi.sd) << ',' << rc.n_seeds << '\n';
    log(LogLevel::Info, mode + ": acc " + num(r.acc.mean) + " +- " + num(r.acc.sd));
  }
  write_json(rc.out / "ablation.json", {{"n_seeds", rc.n_seeds}, {"seed", rc.model.seed}, {"rows", jrows}});
  write_text(rc.out / "ablation.csv", csv.str());
  return 0;
}

inline constexpr std::uint64_t kDiagnoseSeedTag = 500;

inline int cmd_diagnose(const Options& o) {
  if (o.checkpoint.empty()) throw ConfigError("diagnose needs --checkpoint");
  const RunConfig rc = resolve(o, false);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  SCCLConfig cfg = ck.config;
  if (o.seed) cfg.seed = *o.seed;
  const Dataset ds = load_data(rc);
  fs::create_directories(rc.out);

  const DenseMatrix e = encode(ck.params, ds.vectors).e;
  const EmbeddingReport rep = evaluate_embeddings(e, ds.labels, cfg, rc.metric);

  DenseMatrix aug_view;
  if (rc.augment) {
    aug_view = augmented_view(ds, make_augmenter(*rc.augment, ds), derive_seed(cfg.seed, kDiagnoseSeedTag));
  } else if (ds.aug1) {
    aug_view = *ds.aug1;
  } else {
    throw ConfigError("diagnose needs an `augment` block or a dataset with aug1/aug2");
  }
  const SimilarityHistogram h = aug_similarity_histogram(e, encode(ck.params, aug_view).e, rc.histogram_bins);

  json hist = json::array();
  std::ostringstream hcsv;
  hcsv << "bin_lower,bin_upper,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    hist.push_back({{"lower", h.bin_lower(b)}, {"upper", h.bin_upper(b)}, {"count", h.counts[b]}});
    hcsv << num(h.bin_lower(b)) << ',' << num(h.bin_upper(b)) << ',' << h.counts[b] << '\n';
  }
  std::ostringstream gcsv;
  gcsv << "labeling,cluster,intra,inter\n";
  auto geo_rows = [&gcsv](const char* name, const ClusterGeometry& g) {
    for (std::size_t k = 0; k < g.intra.size(); ++k) {
      gcsv << name << ',' << k << ',' << num(g.intra[k]) << ',' << num(g.inter[k]) << '\n';
    }
  };
  if (rep.geometry_true) geo_rows("true", *rep.geometry_true);
  geo_rows("pred", rep.geometry_pred);

  json out = {
      {"n", ds.size()},
      {"k", cfg.n_clusters},
      {"seed", cfg.seed},
      {"metric", rc.metric == DistanceMetric::Euclidean ? "euclidean" : "cosine_distance"},
      {"geometry_true", rep.geometry_true ? geometry_json(*rep.geometry_true) : json(nullptr)},
      {"geometry_pred", geometry_json(rep.geometry_pred)},
      {"histogram", {{"bins", rc.histogram_bins}, {"mean_similarity", h.mean}, {"counts", hist}}},
  };
  write_json(rc.out / "diagnose.json", out);
  write_text(rc.out / "geometry.csv", gcsv.str());
  write_text(rc.out / "histogram.csv", hcsv.str());
  log(LogLevel::Info, "diagnose: mean original-vs-augmented cosine " + num(h.mean));
  return 0;
}

inline int cmd_evaluate(const Options& o) {
  if (o.checkpoint.empty()) throw ConfigError("evaluate needs --checkpoint");
  const RunConfig rc = resolve(o, false);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  SCCLConfig cfg = ck.config;
  if (o.seed) cfg.seed = *o.seed;
  const Dataset ds = load_data(rc);
  if (!ds.has_labels()) throw ConfigError("evaluate needs ground-truth labels in the dataset");
  fs::create_directories(rc.out);
  const EmbeddingReport rep = evaluate_params(ck.params, ds, cfg, rc.metric);
  const json m = metrics_json(rep, cfg, ds.size());
  write_json(rc.out / "metrics.json", m);
  std::cout << m.dump() << '\n';
  return 0;
}

inline int cmd_sweep(const Options& o) {
  const RunConfig rc = resolve(o, true);
  if (!rc.augment) throw ConfigError("sweep needs an `augment` block naming the kind to sweep");
  if (rc.sweep_strengths.empty()) throw ConfigError("sweep needs `sweep.strengths`");
  const Dataset ds = load_data(rc);
  if (!ds.has_labels()) throw ConfigError("sweep needs a labelled dataset");
  fs::create_directories(rc.out);
  const auto rows = strength_sweep(ds, *rc.augment, rc.sweep_strengths, rc.model, rc.n_seeds);
  json jrows = json::array();
  std::ostringstream csv;
  csv << "strength,acc_mean,nmi_mean\n";
  for (const auto& r : rows) {
    jrows.push_back({{"strength", r.strength}, {"acc_mean", r.acc_mean}, {"nmi_mean", r.nmi_mean}});
    csv << num(r.strength) << ',' << num(r.acc_mean) << ',' << num(r.nmi_mean) << '\n';
  }
  write_json(rc.out / "sweep.json",
             {{"kind", std::string(to_string(rc.augment->kind))}, {"n_seeds", rc.n_seeds}, {"rows", jrows}});
  write_text(rc.out / "sweep.csv", csv.str());
  return 0;
}

// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"sccl: contrastive clustering over embedding vectors"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool checkpoint) {
    sub->add_option("--config", o.config, "run config (JSON)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", seed, "seed override");
    sub->add_option("--eta-on", o.eta_on, "term multiplied by eta")->check(CLI::IsMember({"cluster", "instance"}));
    sub->add_option("--data", o.data, "dataset file (.jsonl or .csv), overrides the config's data source");
    if (checkpoint) sub->add_option("--checkpoint", o.checkpoint, "checkpoint.json from `train`");
  };
  CLI::App* train = app.add_subcommand("train", "train one model; writes checkpoint.json, metrics.json, trace.csv");
  CLI::App* ablate = app.add_subcommand("ablate", "all four training modes over n_seeds; writes ablation.json/csv");
  CLI::App* diagnose = app.add_subcommand("diagnose", "cluster geometry and augmentation similarity of a checkpoint");
  CLI::App* evaluate = app.add_subcommand("evaluate", "K-means ACC/NMI of a checkpoint on a labelled dataset");
  CLI::App* sweep = app.add_subcommand("sweep", "augmentation-strength sweep; writes sweep.json/csv");
  add_common(train, false);
  add_common(ablate, false);
  add_common(diagnose, true);
  add_common(evaluate, true);
  add_common(sweep, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) o.seed = seed;
  }

  try {
    if (*train) return cmd_train(o);
    if (*ablate) return cmd_ablate(o);
    if (*diagnose) return cmd_diagnose(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*sweep) return cmd_sweep(o);
  } catch (const ConfigError& e) {
    log(LogLevel::Error, std::string("config error: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log(LogLevel::Error, std::string("error: ") + e.what());
    return 1;
  }
  return 2;
}

}  // namespace sccl::cli
