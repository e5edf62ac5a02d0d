#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sccl/config.hpp"
#include "sccl/errors.hpp"
#include "sccl/matrix.hpp"

namespace sccl {

// Student's-t soft assignment, one row per instance.
struct AssignmentMatrix {
  DenseMatrix q;
};

// Sharpened, frequency-normalized target. `freqs` are the batch column sums of q.
struct TargetMatrix {
  DenseMatrix p;
  std::vector<double> freqs;
};

inline AssignmentMatrix soft_assign(const DenseMatrix& e, const DenseMatrix& mu, double alpha) {
  if (mu.rows() < 2) throw ConfigError("soft_assign: need at least 2 centroids");
  if (e.cols() != mu.cols()) throw DimensionError("soft_assign: embedding and centroid widths differ");
  if (!(alpha > 0.0)) throw ArgumentError("soft_assign: alpha must be > 0");
  const std::size_t m = e.rows(), k = mu.rows();
  const double expo = (alpha + 1.0) / 2.0;
  AssignmentMatrix out{DenseMatrix(m, k)};
  std::vector<double> logw(k);
  for (std::size_t j = 0; j < m; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      logw[c] = -expo * std::log1p(squared_distance(e.row(j), mu.row(c)) / alpha);
      mx = std::max(mx, logw[c]);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      logw[c] = std::exp(logw[c] - mx);
      sum += logw[c];
    }
    for (std::size_t c = 0; c < k; ++c) out.q(j, c) = logw[c] / sum;
  }
  return out;
}

inline TargetMatrix target_distribution(const AssignmentMatrix& assignment) {
  const DenseMatrix& q = assignment.q;
  const std::size_t m = q.rows(), k = q.cols();
  TargetMatrix out{DenseMatrix(m, k), std::vector<double>(k, 0.0)};
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t c = 0; c < k; ++c) out.freqs[c] += q(j, c);
  }
  for (std::size_t j = 0; j < m; ++j) {
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double v = out.freqs[c] > 0.0 ? q(j, c) * q(j, c) / out.freqs[c] : 0.0;
      out.p(j, c) = v;
      sum += v;
    }
    for (std::size_t c = 0; c < k; ++c) out.p(j, c) /= sum;
  }
  return out;
}

// KL[p || q] with 0 log 0 = 0.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

struct ClusterLossResult {
  double loss = 0.0;
  DenseMatrix grad_e;
  DenseMatrix grad_mu;
  std::vector<double> per_instance;
  // Gradients w.r.t. the two augmented views; empty for the Original variant.
  DenseMatrix grad_aug1;
  DenseMatrix grad_aug2;
};

// Embeddings of the two augmented views, row j of each derived from original row j.
struct AugmentedEmbeddings {
  const DenseMatrix& view1;
  const DenseMatrix& view2;
};

namespace detail {

// Adds scale * KL[target_j || q_j(x_j)] to per_instance[j] and its gradient (target frozen)
// w.r.t. x and mu to grad_x and grad_mu.
inline void accumulate_kl(const DenseMatrix& x, const DenseMatrix& mu, double alpha, const DenseMatrix& target,
                          double scale, std::vector<double>& per_instance, DenseMatrix& grad_x,
                          DenseMatrix& grad_mu) {
  const AssignmentMatrix a = soft_assign(x, mu, alpha);
  const std::size_t m = x.rows(), k = mu.rows(), d = x.cols();
  for (std::size_t j = 0; j < m; ++j) {
    per_instance[j] += kl_divergence(target.row(j), a.q.row(j));
    for (std::size_t c = 0; c < k; ++c) {
      const double dist2 = squared_distance(x.row(j), mu.row(c));
      const double coef = scale * (target(j, c) - a.q(j, c)) * (alpha + 1.0) / (alpha + dist2);
      if (coef == 0.0) continue;
      for (std::size_t t = 0; t < d; ++t) {
        const double diff = coef * (x(j, t) - mu(c, t));
        grad_x(j, t) += diff;
        grad_mu(c, t) -= diff;
      }
    }
  }
}

}  // namespace detail

// Clustering loss, mean over the M instances of the chosen per-instance KL sum.
// Targets are recomputed from the batch and held constant for the gradient.
//   Original:          KL[p_j || q_j] on the original embeddings
//   AltAnchorSwap:     KL[p_{j1} || q_{j2}] + KL[p_{j2} || q_{j1}]
//   AltOriginalAnchor: KL[p_{j0} || q_{j1}] + KL[p_{j0} || q_{j2}]
// Each p uses the soft frequencies of the batch it is computed from.
inline ClusterLossResult cluster_loss(const DenseMatrix& e, const DenseMatrix& mu, double alpha,
                                      ClusterLossVariant variant,
                                      std::optional<AugmentedEmbeddings> aug = std::nullopt) {
  const std::size_t m = e.rows();
  if (m == 0) throw ArgumentError("cluster_loss: empty batch");
  ClusterLossResult res;
  res.per_instance.assign(m, 0.0);
  res.grad_e = DenseMatrix(m, e.cols());
  res.grad_mu = DenseMatrix(mu.rows(), mu.cols());
  const double scale = 1.0 / static_cast<double>(m);

  if (variant == ClusterLossVariant::Original) {
    const TargetMatrix t = target_distribution(soft_assign(e, mu, alpha));
    detail::accumulate_kl(e, mu, alpha, t.p, scale, res.per_instance, res.grad_e, res.grad_mu);
  } else {
    if (!aug) throw ContractError("cluster_loss: alternative variants need augmented embeddings");
    const DenseMatrix& v1 = aug->view1;
    const DenseMatrix& v2 = aug->view2;
    if (v1.rows() != m || v2.rows() != m || v1.cols() != e.cols() || v2.cols() != e.cols()) {
      throw DimensionError("cluster_loss: augmented embeddings must match the original batch shape");
    }
    res.grad_aug1 = DenseMatrix(m, e.cols());
    res.grad_aug2 = DenseMatrix(m, e.cols());
    if (variant == ClusterLossVariant::AltAnchorSwap) {
      const TargetMatrix t1 = target_distribution(soft_assign(v1, mu, alpha));
      const TargetMatrix t2 = target_distribution(soft_assign(v2, mu, alpha));
      detail::accumulate_kl(v2, mu, alpha, t1.p, scale, res.per_instance, res.grad_aug2, res.grad_mu);
      detail::accumulate_kl(v1, mu, alpha, t2.p, scale, res.per_instance, res.grad_aug1, res.grad_mu);
    } else {
      const TargetMatrix t0 = target_distribution(soft_assign(e, mu, alpha));
      detail::accumulate_kl(v1, mu, alpha, t0.p, scale, res.per_instance, res.grad_aug1, res.grad_mu);
      detail::accumulate_kl(v2, mu, alpha, t0.p, scale, res.per_instance, res.grad_aug2, res.grad_mu);
    }
  }
  double total = 0.0;
  for (double l : res.per_instance) total += l;
  res.loss = total * scale;
  return res;
}

}  // namespace sccl
