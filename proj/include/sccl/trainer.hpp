#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sccl/augment.hpp"
#include "sccl/clustering.hpp"
#include "sccl/config.hpp"
#include "sccl/contrastive.hpp"
#include "sccl/dataset.hpp"
#include "sccl/metrics.hpp"
#include "sccl/minibatch.hpp"
#include "sccl/nn.hpp"

namespace sccl {

inline constexpr double kNotComputed = std::numeric_limits<double>::quiet_NaN();

// Seed tags for the independent streams of one run.
namespace seed_tag {
inline constexpr std::uint64_t kInit = 100;
inline constexpr std::uint64_t kSampler = 200;
inline constexpr std::uint64_t kKMeans = 300;
inline constexpr std::uint64_t kEval = 400;
}  // namespace seed_tag

struct TraceRecord {
  std::size_t iter = 0;
  double loss_total = kNotComputed;
  double loss_cluster = kNotComputed;
  double loss_instance = kNotComputed;
  std::optional<double> acc;
  std::optional<double> nmi;
  std::optional<double> intra_true;
  std::optional<double> inter_true;
  std::optional<double> intra_pred;
  std::optional<double> inter_pred;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
};

struct StepLosses {
  double total = kNotComputed;
  double cluster = kNotComputed;
  double instance = kNotComputed;
};

struct GradientResult {
  StepLosses losses;
  ParamGrads grads;
};

// The phase actually optimized: Sequential resolves to InstanceOnly before the
// split and ClusterOnly after it.
inline TrainMode effective_mode(const SCCLConfig& config, std::size_t steps_done, std::size_t total_iters) {
  if (config.mode != TrainMode::Sequential) return config.mode;
  return steps_done < config.resolve_phase_split(total_iters) ? TrainMode::InstanceOnly : TrainMode::ClusterOnly;
}

inline bool uses_clustering(TrainMode m) { return m == TrainMode::Joint || m == TrainMode::ClusterOnly; }
inline bool uses_contrastive(TrainMode m) { return m == TrainMode::Joint || m == TrainMode::InstanceOnly; }

// Loss and exact gradient of one minibatch under `mode` (which must not be Sequential).
// Joint: L = L_instance + eta * L_cluster (eta_on = cluster) or L_cluster + eta * L_instance.
inline GradientResult compute_gradients(const ModelParams& params, const Minibatch& batch, const SCCLConfig& config,
                                        TrainMode mode) {
  if (mode == TrainMode::Sequential) throw ContractError("compute_gradients: resolve Sequential to a phase first");
  const bool clustering = uses_clustering(mode);
  const bool contrastive = uses_contrastive(mode);
  if (clustering && !params.centroids_initialized) {
    throw ContractError("compute_gradients: centroids are not initialized for a clustering mode");
  }
  const bool alt = config.cluster_loss_variant != ClusterLossVariant::Original;
  double w_cluster = 1.0, w_instance = 1.0;
  if (mode == TrainMode::Joint) {
    (config.eta_on == EtaTarget::Cluster ? w_cluster : w_instance) = config.eta;
  }

  ForwardCaches caches;
  std::optional<Encoded> orig;
  std::optional<Encoded> aug;
  if (clustering) orig = encode(params, batch.orig);
  if (contrastive || (clustering && alt)) aug = encode(params, batch.aug);

  GradientResult out;
  DenseMatrix grad_e, grad_z, grad_e_aug;
  DenseMatrix grad_mu;
  if (clustering) {
    ClusterLossResult cl;
    if (alt) {
      const DenseMatrix v1 = strided_rows(aug->e, 0, 2);
      const DenseMatrix v2 = strided_rows(aug->e, 1, 2);
      cl = cluster_loss(orig->e, params.centroids, config.alpha, config.cluster_loss_variant,
                        AugmentedEmbeddings{v1, v2});
      grad_e_aug = scaled(interleave_rows(cl.grad_aug1, cl.grad_aug2), w_cluster);
    } else {
      cl = cluster_loss(orig->e, params.centroids, config.alpha, ClusterLossVariant::Original);
    }
    out.losses.cluster = cl.loss;
    grad_e = scaled(std::move(cl.grad_e), w_cluster);
    grad_mu = scaled(std::move(cl.grad_mu), w_cluster);
    caches.orig = std::move(orig->cache);
  }
  if (contrastive) {
    Projected proj = project(params, aug->e);
    ContrastiveResult con;
    try {
      con = instance_cl_loss(proj.z, config.temperature);
    } catch (const DegenerateVectorError& e) {
      // usually every hidden ReLU of g is off for that view; a wider embed_dim makes it rare
      throw DegenerateVectorError(std::string(e.what()) + " in the projection head output");
    }
    out.losses.instance = con.loss;
    grad_z = scaled(std::move(con.grad_z), w_instance);
    caches.proj = std::move(proj.cache);
  }
  if (aug) caches.aug = std::move(aug->cache);

  out.losses.total = 0.0;
  if (clustering) out.losses.total += w_cluster * out.losses.cluster;
  if (contrastive) out.losses.total += w_instance * out.losses.instance;

  out.grads = backward(params, caches, grad_e, grad_z, grad_e_aug);
  if (clustering) out.grads.centroids = std::move(grad_mu);
  return out;
}

// Centroids from K-means on the current embeddings of the full dataset.
inline void init_centroids(ModelParams& params, const Dataset& dataset, const SCCLConfig& config) {
  if (dataset.size() == 0) throw ArgumentError("init_centroids: dataset is empty");
  if (config.n_clusters > dataset.size()) {
    throw ConfigError("n_clusters = " + std::to_string(config.n_clusters) + " exceeds the dataset size");
  }
  const DenseMatrix e = encode(params, dataset.vectors).e;
  const KMeansResult km = kmeans_restarts(e, config.n_clusters, config.kmeans_iters,
                                          derive_seed(config.seed, seed_tag::kKMeans), config.kmeans_restarts);
  params.centroids = km.centroids;
  params.centroids_initialized = true;
}

struct EmbeddingReport {
  std::vector<int> predicted;
  std::optional<double> acc;
  std::optional<double> nmi;
  std::optional<ClusterGeometry> geometry_true;
  ClusterGeometry geometry_pred;
};

// Evaluation protocol: K-means (best of kmeans_restarts) with K = n_clusters on the embeddings, then ACC/NMI
// against the labels when present, plus cluster geometry under both labelings.
inline EmbeddingReport evaluate_embeddings(const DenseMatrix& e, const std::optional<std::vector<int>>& labels,
                                           const SCCLConfig& config,
                                           DistanceMetric metric = DistanceMetric::Euclidean) {
  EmbeddingReport r;
  const KMeansResult km = kmeans_restarts(e, config.n_clusters, config.kmeans_iters,
                                          derive_seed(config.seed, seed_tag::kEval), config.kmeans_restarts);
  r.predicted = km.labels;
  r.geometry_pred = cluster_geometry(e, r.predicted, metric);
  if (labels) {
    r.acc = accuracy(*labels, r.predicted);
    r.nmi = nmi(*labels, r.predicted);
    r.geometry_true = cluster_geometry(e, *labels, metric);
  }
  return r;
}

inline EmbeddingReport evaluate_params(const ModelParams& params, const Dataset& dataset, const SCCLConfig& config,
                                       DistanceMetric metric = DistanceMetric::Euclidean) {
  return evaluate_embeddings(encode(params, dataset.vectors).e, dataset.labels, config, metric);
}

// Owns all mutable state of one run: parameters, optimizer moments, sampler stream.
class Trainer {
 public:
  Trainer(const Dataset& dataset, SCCLConfig config, std::optional<Augmenter> augmenter = std::nullopt)
      : dataset_(&dataset),
        config_(std::move(config)),
        sampler_(dataset, config_.batch_size, derive_seed(config_.seed, seed_tag::kSampler), std::move(augmenter)) {
    config_.validate();
    if (config_.n_clusters > dataset.size()) throw ConfigError("n_clusters exceeds the dataset size");
    total_iters_ = config_.resolve_max_iters(dataset.size());
    Rng rng = make_rng(derive_seed(config_.seed, seed_tag::kInit));
    params_ = init_params(config_, dataset.dim(), rng);
    adam_ = make_adam_state(params_);
  }

  [[nodiscard]] const ModelParams& params() const noexcept { return params_; }
  [[nodiscard]] ModelParams& params() noexcept { return params_; }
  [[nodiscard]] const SCCLConfig& config() const noexcept { return config_; }
  [[nodiscard]] const TrainTrace& trace() const noexcept { return trace_; }
  [[nodiscard]] std::size_t iter() const noexcept { return iter_; }
  [[nodiscard]] std::size_t total_iters() const noexcept { return total_iters_; }
  [[nodiscard]] MinibatchSampler& sampler() noexcept { return sampler_; }

  void init_centroids() { sccl::init_centroids(params_, *dataset_, config_); }

  // Called with every trace record as it is logged.
  void on_log(std::function<void(const TraceRecord&)> cb) { on_log_ = std::move(cb); }

  // One optimizer step on `batch`; Sequential phase switches happen here.
  StepLosses train_step(const Minibatch& batch) {
    if (iter_ >= total_iters_) throw ContractError("train_step: max_iters already reached");
    const TrainMode mode = effective_mode(config_, iter_, total_iters_);
    if (config_.mode == TrainMode::Sequential && mode == TrainMode::ClusterOnly && !params_.centroids_initialized) {
      // Phase boundary: fresh centroids on the contrastively trained embeddings and fresh moments.
      init_centroids();
      adam_ = make_adam_state(params_);
    }
    GradientResult g = compute_gradients(params_, batch, config_, mode);
    adam_step(params_, g.grads, adam_, config_.lr_backbone, config_.lr_heads);
    ++iter_;
    return g.losses;
  }

  // Runs to max_iters, logging every log_every steps and at the last step.
  void run() {
    if (total_iters_ == 0) return;
    if (uses_clustering(effective_mode(config_, 0, total_iters_)) && !params_.centroids_initialized) init_centroids();
    if (trace_.records.empty()) log(0, StepLosses{});
    while (iter_ < total_iters_) {
      const StepLosses losses = train_step(sampler_.next());
      if (iter_ % config_.log_every == 0 || iter_ == total_iters_) log(iter_, losses);
    }
  }

 private:
  void log(std::size_t iter, const StepLosses& losses) {
    TraceRecord r;
    r.iter = iter;
    r.loss_total = losses.total;
    r.loss_cluster = losses.cluster;
    r.loss_instance = losses.instance;
    if (dataset_->has_labels()) {
      const EmbeddingReport rep = evaluate_params(params_, *dataset_, config_);
      r.acc = rep.acc;
      r.nmi = rep.nmi;
      r.intra_true = rep.geometry_true->mean_intra;
      r.inter_true = rep.geometry_true->mean_inter;
      r.intra_pred = rep.geometry_pred.mean_intra;
      r.inter_pred = rep.geometry_pred.mean_inter;
    }
    trace_.records.push_back(r);
    if (on_log_) on_log_(r);
  }

  const Dataset* dataset_;
  SCCLConfig config_;
  MinibatchSampler sampler_;
  std::size_t total_iters_ = 0;
  std::size_t iter_ = 0;
  ModelParams params_;
  AdamState adam_;
  TrainTrace trace_;
  std::function<void(const TraceRecord&)> on_log_;
};

struct TrainResult {
  ModelParams params;
  TrainTrace trace;
};

inline TrainResult train(const Dataset& dataset, const SCCLConfig& config,
                         std::optional<Augmenter> augmenter = std::nullopt) {
  Trainer t(dataset, config, std::move(augmenter));
  t.run();
  return {t.params(), t.trace()};
}

}  // namespace sccl
