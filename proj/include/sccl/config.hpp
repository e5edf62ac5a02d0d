#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sccl/errors.hpp"

namespace sccl {

enum class TrainMode { Joint, InstanceOnly, ClusterOnly, Sequential };

enum class ClusterLossVariant { Original, AltAnchorSwap, AltOriginalAnchor };

enum class EncoderInit { Glorot, Identity };

inline std::string_view to_string(EncoderInit e) { return e == EncoderInit::Glorot ? "glorot" : "identity"; }

inline EncoderInit parse_encoder_init(std::string_view s) {
  if (s == "glorot") return EncoderInit::Glorot;
  if (s == "identity") return EncoderInit::Identity;
  throw ConfigError("encoder_init must be 'glorot' or 'identity', got '" + std::string(s) + "'");
}

// Which loss term the balance weight eta multiplies in the joint objective.
enum class EtaTarget { Cluster, Instance };

inline std::string_view to_string(TrainMode m) {
  switch (m) {
    case TrainMode::Joint: return "Joint";
    case TrainMode::InstanceOnly: return "InstanceOnly";
    case TrainMode::ClusterOnly: return "ClusterOnly";
    case TrainMode::Sequential: return "Sequential";
  }
  return "?";
}

inline std::string_view to_string(ClusterLossVariant v) {
  switch (v) {
    case ClusterLossVariant::Original: return "Original";
    case ClusterLossVariant::AltAnchorSwap: return "AltAnchorSwap";
    case ClusterLossVariant::AltOriginalAnchor: return "AltOriginalAnchor";
  }
  return "?";
}

inline std::string_view to_string(EtaTarget t) {
  return t == EtaTarget::Cluster ? "cluster" : "instance";
}

inline TrainMode parse_train_mode(std::string_view s) {
  if (s == "Joint") return TrainMode::Joint;
  if (s == "InstanceOnly") return TrainMode::InstanceOnly;
  if (s == "ClusterOnly") return TrainMode::ClusterOnly;
  if (s == "Sequential") return TrainMode::Sequential;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

inline ClusterLossVariant parse_cluster_loss_variant(std::string_view s) {
  if (s == "Original") return ClusterLossVariant::Original;
  if (s == "AltAnchorSwap") return ClusterLossVariant::AltAnchorSwap;
  if (s == "AltOriginalAnchor") return ClusterLossVariant::AltOriginalAnchor;
  throw ConfigError("unknown cluster_loss_variant '" + std::string(s) + "'");
}

inline EtaTarget parse_eta_target(std::string_view s) {
  if (s == "cluster") return EtaTarget::Cluster;
  if (s == "instance") return EtaTarget::Instance;
  throw ConfigError("eta_on must be 'cluster' or 'instance', got '" + std::string(s) + "'");
}

struct SCCLConfig {
  std::size_t n_clusters = 2;
  double temperature = 0.5;
  double alpha = 1.0;
  double eta = 10.0;
  EtaTarget eta_on = EtaTarget::Cluster;
  std::size_t batch_size = 400;
  double lr_backbone = 5e-6;
  double lr_heads = 5e-4;
  // Unset means `epochs` full passes over the dataset.
  std::optional<std::size_t> max_iters;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::Joint;
  ClusterLossVariant cluster_loss_variant = ClusterLossVariant::Original;
  std::size_t embed_dim = 16;
  std::size_t contrast_dim = 128;
  // Number of affine layers in the encoder; 0 is the identity map.
  std::size_t encoder_depth = 1;
  // Encoder weights start Glorot-uniform, or as the identity (a stand-in for a
  // pretrained backbone; needs square layers).
  EncoderInit encoder_init = EncoderInit::Glorot;
  // Sequential mode switches from contrastive to clustering here; unset means max_iters / 2.
  std::optional<std::size_t> phase_split;
  std::size_t log_every = 50;
  std::size_t kmeans_iters = 100;
  // Independent K-means runs per evaluation / centroid init; the lowest SSE wins.
  std::size_t kmeans_restarts = 10;

  void validate() const {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
    if (!(eta >= 0.0)) throw ConfigError("eta must be >= 0");
    if (n_clusters < 2) throw ConfigError("n_clusters must be >= 2");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    if (embed_dim == 0 || contrast_dim == 0) throw ConfigError("embed_dim and contrast_dim must be > 0");
    if (encoder_depth > 2) throw ConfigError("encoder_depth must be 0, 1 or 2");
    if (!(lr_backbone >= 0.0) || !(lr_heads >= 0.0)) throw ConfigError("learning rates must be >= 0");
    if (log_every == 0) throw ConfigError("log_every must be > 0");
    if (kmeans_restarts == 0) throw ConfigError("kmeans_restarts must be > 0");
  }

  [[nodiscard]] std::size_t resolve_max_iters(std::size_t n_instances) const {
    if (max_iters) return *max_iters;
    const std::size_t m = std::min(batch_size, n_instances);
    const std::size_t per_epoch = m == 0 ? 0 : n_instances / m;
    return epochs * per_epoch;
  }

  [[nodiscard]] std::size_t resolve_phase_split(std::size_t total_iters) const {
    return phase_split ? *phase_split : total_iters / 2;
  }
};

inline void to_json(nlohmann::json& j, const SCCLConfig& c) {
  j = nlohmann::json{
      {"n_clusters", c.n_clusters},
      {"temperature", c.temperature},
      {"alpha", c.alpha},
      {"eta", c.eta},
      {"eta_on", std::string(to_string(c.eta_on))},
      {"batch_size", c.batch_size},
      {"lr_backbone", c.lr_backbone},
      {"lr_heads", c.lr_heads},
      {"epochs", c.epochs},
      {"seed", c.seed},
      {"mode", std::string(to_string(c.mode))},
      {"cluster_loss_variant", std::string(to_string(c.cluster_loss_variant))},
      {"embed_dim", c.embed_dim},
      {"contrast_dim", c.contrast_dim},
      {"encoder_depth", c.encoder_depth},
      {"encoder_init", std::string(to_string(c.encoder_init))},
      {"log_every", c.log_every},
      {"kmeans_iters", c.kmeans_iters},
      {"kmeans_restarts", c.kmeans_restarts},
  };
  j["max_iters"] = c.max_iters ? nlohmann::json(*c.max_iters) : nlohmann::json(nullptr);
  j["phase_split"] = c.phase_split ? nlohmann::json(*c.phase_split) : nlohmann::json(nullptr);
}

// Unknown keys are rejected so typos in run configs surface immediately.
inline SCCLConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  SCCLConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_clusters") c.n_clusters = v.get<std::size_t>();
      else if (key == "temperature") c.temperature = v.get<double>();
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "eta") c.eta = v.get<double>();
      else if (key == "eta_on") c.eta_on = parse_eta_target(v.get<std::string>());
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "lr_backbone") c.lr_backbone = v.get<double>();
      else if (key == "lr_heads") c.lr_heads = v.get<double>();
      else if (key == "max_iters") {
        if (v.is_null()) c.max_iters.reset();
        else c.max_iters = v.get<std::size_t>();
      } else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "mode") c.mode = parse_train_mode(v.get<std::string>());
      else if (key == "cluster_loss_variant")
        c.cluster_loss_variant = parse_cluster_loss_variant(v.get<std::string>());
      else if (key == "embed_dim") c.embed_dim = v.get<std::size_t>();
      else if (key == "contrast_dim") c.contrast_dim = v.get<std::size_t>();
      else if (key == "encoder_depth") c.encoder_depth = v.get<std::size_t>();
      else if (key == "encoder_init") c.encoder_init = parse_encoder_init(v.get<std::string>());
      else if (key == "phase_split") {
        if (v.is_null()) c.phase_split.reset();
        else c.phase_split = v.get<std::size_t>();
      } else if (key == "log_every") c.log_every = v.get<std::size_t>();
      else if (key == "kmeans_iters") c.kmeans_iters = v.get<std::size_t>();
      else if (key == "kmeans_restarts") c.kmeans_restarts = v.get<std::size_t>();
      else throw ConfigError("unknown model config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace sccl
