#pragma once

// Multi-run drivers shared by the CLI and the acceptance suite: mode ablation,
// augmentation-strength sweep, and the original-vs-augmented similarity diagnostic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sccl/augment.hpp"
#include "sccl/dataset.hpp"
#include "sccl/metrics.hpp"
#include "sccl/trainer.hpp"

namespace sccl {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value
};

inline MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return r;
}

// The augmenter a dataset needs: token kinds draw substitutes from the corpus vocabulary.
inline Augmenter make_augmenter(const AugmentSpec& spec, const Dataset& ds) {
  if (spec.is_token_kind()) {
    if (!ds.has_texts()) throw KindMismatchError("token augmentation requires dataset texts");
    return Augmenter(spec, build_vocabulary(ds.texts));
  }
  return Augmenter(spec);
}

// One augmented draw per instance, featurized at the dataset width for token kinds.
inline DenseMatrix augmented_view(const Dataset& ds, const Augmenter& aug, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  DenseMatrix out(ds.size(), ds.dim());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sample src = aug.spec().is_token_kind()
                           ? Sample(tokenize(ds.texts[i]))
                           : Sample(std::vector<double>(ds.vectors.row(i).begin(), ds.vectors.row(i).end()));
    const Sample a = aug.apply(src, rng);
    const std::vector<double> v = std::holds_alternative<TokenSeq>(a)
                                      ? hashing_featurize(std::get<TokenSeq>(a), ds.dim())
                                      : std::get<std::vector<double>>(a);
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

struct RunSummary {
  TrainMode mode = TrainMode::Joint;
  std::uint64_t seed = 0;
  double acc = 0.0;
  double nmi = 0.0;
  double intra_init = 0.0, intra_final = 0.0;
  double inter_init = 0.0, inter_final = 0.0;
};

struct AblationRow {
  TrainMode mode = TrainMode::Joint;
  MeanSd acc;
  MeanSd nmi;
  std::vector<RunSummary> runs;  // sorted by seed
};

inline RunSummary summarize_run(const TrainResult& r, TrainMode mode, std::uint64_t seed) {
  if (r.trace.records.empty() || !r.trace.records.back().acc) {
    throw ContractError("ablation needs labelled data and at least one logged step");
  }
  const TraceRecord& a = r.trace.records.front();
  const TraceRecord& b = r.trace.records.back();
  return {mode, seed, *b.acc, *b.nmi, *a.intra_true, *b.intra_true, *a.inter_true, *b.inter_true};
}

// Trains `config` under every mode with seeds config.seed, config.seed + 1, ...
inline std::vector<AblationRow> run_ablation(const Dataset& ds, const SCCLConfig& config,
                                             const std::optional<AugmentSpec>& aug, std::size_t n_seeds) {
  if (!ds.has_labels()) throw ContractError("ablation needs ground-truth labels");
  if (n_seeds == 0) throw ConfigError("n_seeds must be >= 1");
  std::vector<AblationRow> rows;
  for (TrainMode mode : {TrainMode::Joint, TrainMode::InstanceOnly, TrainMode::ClusterOnly, TrainMode::Sequential}) {
    AblationRow row;
    row.mode = mode;
    std::vector<double> accs, nmis;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      SCCLConfig c = config;
      c.mode = mode;
      c.seed = config.seed + s;
      std::optional<Augmenter> a;
      if (aug) a = make_augmenter(*aug, ds);
      row.runs.push_back(summarize_run(train(ds, c, std::move(a)), mode, c.seed));
      accs.push_back(row.runs.back().acc);
      nmis.push_back(row.runs.back().nmi);
    }
    row.acc = mean_sd(accs);
    row.nmi = mean_sd(nmis);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct SweepRow {
  double strength = 0.0;
  double acc_mean = 0.0;
  double nmi_mean = 0.0;
};

// `base` with every leaf stage's strength set to `s`.
inline AugmentSpec with_strength(AugmentSpec base, double s) {
  if (base.kind == AugmentKind::Compose) {
    for (auto& st : base.stages) st = with_strength(st, s);
  } else {
    base.strength = s;
  }
  return base;
}

// Full training per strength and seed; metrics are the final-embedding K-means ACC/NMI.
inline std::vector<SweepRow> strength_sweep(const Dataset& ds, const AugmentSpec& base,
                                            const std::vector<double>& strengths, const SCCLConfig& config,
                                            std::size_t n_seeds) {
  if (!ds.has_labels()) throw ContractError("strength_sweep needs ground-truth labels");
  if (n_seeds == 0) throw ConfigError("n_seeds must be >= 1");
  std::vector<SweepRow> out;
  for (double s : strengths) {
    const AugmentSpec spec = with_strength(base, s);
    SweepRow row{s, 0.0, 0.0};
    for (std::size_t k = 0; k < n_seeds; ++k) {
      SCCLConfig c = config;
      c.seed = config.seed + k;
      const TrainResult r = train(ds, c, make_augmenter(spec, ds));
      const EmbeddingReport rep = evaluate_params(r.params, ds, c);
      row.acc_mean += *rep.acc;
      row.nmi_mean += *rep.nmi;
    }
    row.acc_mean /= static_cast<double>(n_seeds);
    row.nmi_mean /= static_cast<double>(n_seeds);
    out.push_back(row);
  }
  return out;
}

}  // namespace sccl
