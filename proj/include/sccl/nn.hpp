#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sccl/config.hpp"
#include "sccl/errors.hpp"
#include "sccl/matrix.hpp"
#include "sccl/rng.hpp"

namespace sccl {

// y = x W^T + b, with W stored out x in.
struct Affine {
  DenseMatrix weight;
  std::vector<double> bias;

  [[nodiscard]] std::size_t in_dim() const noexcept { return weight.cols(); }
  [[nodiscard]] std::size_t out_dim() const noexcept { return weight.rows(); }
  bool operator==(const Affine&) const = default;
};

inline Affine zero_affine(std::size_t in, std::size_t out) { return {DenseMatrix(out, in), std::vector<double>(out, 0.0)}; }

inline Affine glorot_affine(std::size_t in, std::size_t out, Rng& rng) {
  Affine a = zero_affine(in, out);
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : a.weight.values()) w = uniform(rng, -bound, bound);
  return a;
}

inline DenseMatrix affine_forward(const Affine& layer, const DenseMatrix& x) {
  if (x.cols() != layer.in_dim()) {
    throw DimensionError("affine layer expects " + std::to_string(layer.in_dim()) + " columns, got " +
                         std::to_string(x.cols()));
  }
  DenseMatrix y(x.rows(), layer.out_dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    auto yr = y.row(r);
    for (std::size_t o = 0; o < layer.out_dim(); ++o) yr[o] = dot(xr, layer.weight.row(o)) + layer.bias[o];
  }
  return y;
}

// Accumulates dW += dy^T x and db += colsum(dy); returns dx = dy W.
inline DenseMatrix affine_backward(const Affine& layer, const DenseMatrix& x, const DenseMatrix& dy, Affine& grad) {
  DenseMatrix dx(x.rows(), layer.in_dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    const auto dyr = dy.row(r);
    auto dxr = dx.row(r);
    for (std::size_t o = 0; o < layer.out_dim(); ++o) {
      const double g = dyr[o];
      if (g == 0.0) continue;
      grad.bias[o] += g;
      auto gw = grad.weight.row(o);
      const auto w = layer.weight.row(o);
      for (std::size_t i = 0; i < layer.in_dim(); ++i) {
        gw[i] += g * xr[i];
        dxr[i] += g * w[i];
      }
    }
  }
  return dx;
}

inline DenseMatrix relu(DenseMatrix x) {
  for (double& v : x.values()) v = v > 0.0 ? v : 0.0;
  return x;
}

inline DenseMatrix relu_backward(const DenseMatrix& pre, DenseMatrix grad) {
  auto g = grad.values();
  const auto p = pre.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(p[i] > 0.0)) g[i] = 0.0;
  }
  return grad;
}

enum class ParamGroup { Backbone, Heads };

// Encoder psi (affine layers with ReLU between them), contrastive head g
// (affine, ReLU, affine) and clustering head f whose weight rows are the centroids.
struct ModelParams {
  std::size_t input_dim = 0;
  std::vector<Affine> encoder;
  Affine g_hidden;
  Affine g_out;
  DenseMatrix centroids;
  bool centroids_initialized = false;
  // Bumped on every optimizer update; forward caches remember the value they saw.
  std::uint64_t version = 0;

  [[nodiscard]] std::size_t embed_dim() const noexcept { return g_hidden.in_dim(); }
  [[nodiscard]] std::size_t contrast_dim() const noexcept { return g_out.out_dim(); }
  [[nodiscard]] std::size_t n_clusters() const noexcept { return centroids.rows(); }

  [[nodiscard]] bool same_weights(const ModelParams& o) const {
    return input_dim == o.input_dim && encoder == o.encoder && g_hidden == o.g_hidden && g_out == o.g_out &&
           centroids == o.centroids;
  }
};

using ParamGrads = ModelParams;

struct TensorRef {
  std::string name;
  std::span<double> values;
  ParamGroup group;
};

// Named views over every trainable tensor, in a fixed order shared by params,
// gradients and optimizer moments.
inline std::vector<TensorRef> tensors(ModelParams& p) {
  std::vector<TensorRef> out;
  for (std::size_t l = 0; l < p.encoder.size(); ++l) {
    const std::string base = "encoder." + std::to_string(l);
    out.push_back({base + ".weight", p.encoder[l].weight.values(), ParamGroup::Backbone});
    out.push_back({base + ".bias", p.encoder[l].bias, ParamGroup::Backbone});
  }
  out.push_back({"g.hidden.weight", p.g_hidden.weight.values(), ParamGroup::Heads});
  out.push_back({"g.hidden.bias", p.g_hidden.bias, ParamGroup::Heads});
  out.push_back({"g.out.weight", p.g_out.weight.values(), ParamGroup::Heads});
  out.push_back({"g.out.bias", p.g_out.bias, ParamGroup::Heads});
  out.push_back({"centroids", p.centroids.values(), ParamGroup::Heads});
  return out;
}

inline ParamGrads zeros_like(const ModelParams& p) {
  ParamGrads g;
  g.input_dim = p.input_dim;
  for (const auto& l : p.encoder) g.encoder.push_back(zero_affine(l.in_dim(), l.out_dim()));
  g.g_hidden = zero_affine(p.g_hidden.in_dim(), p.g_hidden.out_dim());
  g.g_out = zero_affine(p.g_out.in_dim(), p.g_out.out_dim());
  g.centroids = DenseMatrix(p.centroids.rows(), p.centroids.cols());
  g.centroids_initialized = p.centroids_initialized;
  g.version = p.version;
  return g;
}

inline ModelParams init_params(const SCCLConfig& config, std::size_t input_dim, Rng& rng) {
  if (input_dim == 0 || config.embed_dim == 0 || config.contrast_dim == 0) {
    throw ArgumentError("init_params: dimensions must be positive");
  }
  if (config.encoder_depth == 0 && input_dim != config.embed_dim) {
    throw ConfigError("encoder_depth 0 is the identity and needs input_dim == embed_dim");
  }
  if (config.encoder_depth > 2) throw ConfigError("encoder_depth must be 0, 1 or 2");
  ModelParams p;
  p.input_dim = input_dim;
  std::size_t in = input_dim;
  if (config.encoder_init == EncoderInit::Identity && config.encoder_depth > 0 && input_dim != config.embed_dim) {
    throw ConfigError("identity encoder init needs input_dim == embed_dim");
  }
  for (std::size_t l = 0; l < config.encoder_depth; ++l) {
    if (config.encoder_init == EncoderInit::Identity) {
      Affine a = zero_affine(in, config.embed_dim);
      for (std::size_t i = 0; i < in; ++i) a.weight(i, i) = 1.0;
      p.encoder.push_back(std::move(a));
    } else {
      p.encoder.push_back(glorot_affine(in, config.embed_dim, rng));
    }
    in = config.embed_dim;
  }
  p.g_hidden = glorot_affine(config.embed_dim, config.embed_dim, rng);
  p.g_out = glorot_affine(config.embed_dim, config.contrast_dim, rng);
  p.centroids = DenseMatrix(config.n_clusters, config.embed_dim);
  return p;
}

inline ModelParams init_params(const SCCLConfig& config, std::size_t input_dim, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return init_params(config, input_dim, rng);
}

struct EncodeCache {
  std::vector<DenseMatrix> inputs;  // input of each layer
  std::vector<DenseMatrix> pre;     // affine output of each layer, before ReLU
  std::size_t rows = 0;
  std::uint64_t version = 0;
};

struct ProjectCache {
  DenseMatrix input;
  DenseMatrix hidden_pre;
  DenseMatrix hidden;
  std::uint64_t version = 0;
};

struct Encoded {
  DenseMatrix e;
  EncodeCache cache;
};

struct Projected {
  DenseMatrix z;
  ProjectCache cache;
};

inline Encoded encode(const ModelParams& params, const DenseMatrix& x) {
  if (x.cols() != params.input_dim) {
    throw DimensionError("encode: input has " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(params.input_dim));
  }
  Encoded out;
  out.cache.rows = x.rows();
  out.cache.version = params.version;
  DenseMatrix h = x;
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    out.cache.inputs.push_back(h);
    DenseMatrix pre = affine_forward(params.encoder[l], h);
    const bool last = l + 1 == params.encoder.size();
    h = last ? pre : relu(pre);
    out.cache.pre.push_back(std::move(pre));
  }
  out.e = std::move(h);
  return out;
}

inline Projected project(const ModelParams& params, const DenseMatrix& e) {
  if (e.cols() != params.embed_dim()) throw DimensionError("project: embedding width mismatch");
  Projected out;
  out.cache.version = params.version;
  out.cache.input = e;
  out.cache.hidden_pre = affine_forward(params.g_hidden, e);
  out.cache.hidden = relu(out.cache.hidden_pre);
  out.z = affine_forward(params.g_out, out.cache.hidden);
  return out;
}

inline void check_fresh(const ModelParams& params, std::uint64_t cache_version, const char* what) {
  if (cache_version != params.version) {
    throw ContractError(std::string(what) + ": forward cache is stale (parameters changed since the forward pass)");
  }
}

// Accumulates encoder gradients into `grads`.
inline void encode_backward(const ModelParams& params, const EncodeCache& cache, const DenseMatrix& grad_e,
                            ParamGrads& grads) {
  check_fresh(params, cache.version, "encode_backward");
  if (grad_e.rows() != cache.rows || grad_e.cols() != params.embed_dim()) {
    throw ContractError("encode_backward: gradient shape does not match the cached forward pass");
  }
  if (cache.inputs.size() != params.encoder.size()) throw ContractError("encode_backward: cache depth mismatch");
  DenseMatrix g = grad_e;
  for (std::size_t l = params.encoder.size(); l-- > 0;) {
    if (l + 1 != params.encoder.size()) g = relu_backward(cache.pre[l], std::move(g));
    g = affine_backward(params.encoder[l], cache.inputs[l], g, grads.encoder[l]);
  }
}

// Accumulates g-head gradients into `grads`; returns the gradient w.r.t. the embeddings fed to g.
inline DenseMatrix project_backward(const ModelParams& params, const ProjectCache& cache, const DenseMatrix& grad_z,
                                    ParamGrads& grads) {
  check_fresh(params, cache.version, "project_backward");
  if (grad_z.rows() != cache.input.rows() || grad_z.cols() != params.contrast_dim()) {
    throw ContractError("project_backward: gradient shape does not match the cached forward pass");
  }
  DenseMatrix gh = affine_backward(params.g_out, cache.hidden, grad_z, grads.g_out);
  gh = relu_backward(cache.hidden_pre, std::move(gh));
  return affine_backward(params.g_hidden, cache.input, gh, grads.g_hidden);
}

// Caches of one training forward pass. `orig` encodes the original batch (clustering
// path); `aug` encodes the augmented batch fed to g. When `aug` is absent, g was
// applied to the output of `orig` and both gradients meet before the encoder.
struct ForwardCaches {
  std::optional<EncodeCache> orig;
  std::optional<EncodeCache> aug;
  std::optional<ProjectCache> proj;
};

// Reverse pass for psi and g. Empty (0x0) gradients mean the path is unused.
// `grad_e_aug` is an extra gradient on the augmented embeddings (alternative clustering losses).
inline ParamGrads backward(const ModelParams& params, const ForwardCaches& caches, const DenseMatrix& grad_e,
                           const DenseMatrix& grad_z, const DenseMatrix& grad_e_aug = {}) {
  ParamGrads grads = zeros_like(params);
  DenseMatrix through_g;
  if (!grad_z.empty()) {
    if (!caches.proj) throw ContractError("backward: grad_z given without a projection cache");
    through_g = project_backward(params, *caches.proj, grad_z, grads);
  }
  if (!grad_e_aug.empty()) {
    if (through_g.empty()) through_g = grad_e_aug;
    else add_in_place(through_g, grad_e_aug);
  }
  if (caches.aug) {
    if (!through_g.empty()) encode_backward(params, *caches.aug, through_g, grads);
    if (!grad_e.empty()) {
      if (!caches.orig) throw ContractError("backward: grad_e given without an encoder cache");
      encode_backward(params, *caches.orig, grad_e, grads);
    }
    return grads;
  }
  DenseMatrix total = grad_e;
  if (!through_g.empty()) {
    if (total.empty()) total = through_g;
    else add_in_place(total, through_g);
  }
  if (!total.empty()) {
    if (!caches.orig) throw ContractError("backward: embedding gradient given without an encoder cache");
    encode_backward(params, *caches.orig, total, grads);
  }
  return grads;
}

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline AdamState make_adam_state(const ModelParams& params) { return {zeros_like(params), zeros_like(params)}; }

// Bias-corrected Adam. Encoder tensors use lr_backbone; g and centroids use lr_heads.
inline void adam_step(ModelParams& params, ParamGrads& grads, AdamState& state, double lr_backbone,
                      double lr_heads) {
  auto p = tensors(params);
  auto g = tensors(grads);
  auto m = tensors(state.m);
  auto v = tensors(state.v);
  if (p.size() != g.size() || p.size() != m.size()) throw DimensionError("adam_step: tensor count mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].values.size() != g[k].values.size() || p[k].values.size() != m[k].values.size()) {
      throw DimensionError("adam_step: shape mismatch on " + p[k].name);
    }
    const double lr = p[k].group == ParamGroup::Backbone ? lr_backbone : lr_heads;
    for (std::size_t i = 0; i < p[k].values.size(); ++i) {
      const double gi = g[k].values[i];
      double& mi = m[k].values[i];
      double& vi = v[k].values[i];
      mi = state.beta1 * mi + (1.0 - state.beta1) * gi;
      vi = state.beta2 * vi + (1.0 - state.beta2) * gi * gi;
      p[k].values[i] -= lr * (mi / c1) / (std::sqrt(vi / c2) + state.eps);
    }
  }
  ++params.version;
}

}  // namespace sccl
