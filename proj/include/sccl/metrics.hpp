#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string_view>
#include <vector>

#include "sccl/contrastive.hpp"
#include "sccl/errors.hpp"
#include "sccl/matrix.hpp"
#include "sccl/rng.hpp"

namespace sccl {

struct KMeansResult {
  DenseMatrix centroids;
  std::vector<int> labels;
  // Within-cluster sum of squares after each assignment step.
  std::vector<double> sse_history;
  std::size_t iterations = 0;

  [[nodiscard]] double sse() const { return sse_history.empty() ? 0.0 : sse_history.back(); }
};

namespace detail {

inline std::size_t nearest_centroid(std::span<const double> x, const DenseMatrix& c, double* best_d2 = nullptr) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < c.rows(); ++k) {
    const double d = squared_distance(x, c.row(k));
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  if (best_d2) *best_d2 = bd;
  return best;
}

inline DenseMatrix kmeanspp_seed(const DenseMatrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  DenseMatrix c(k, x.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = uniform_index(rng, n);
  for (std::size_t j = 0; j < k; ++j) {
    std::copy(x.row(pick).begin(), x.row(pick).end(), c.row(j).begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(i), c.row(j)));
      total += d2[i];
    }
    if (j + 1 == k) break;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, n);
    }
  }
  return c;
}

}  // namespace detail

// k-means++ seeding followed by Lloyd iterations until the assignment stops changing
// or max_iters is reached. An emptied cluster is re-seeded at the point farthest from
// its current centroid. Ties go to the lowest centroid index.
inline KMeansResult kmeans(const DenseMatrix& x, std::size_t k, std::size_t max_iters, std::uint64_t seed) {
  const std::size_t n = x.rows();
  if (k == 0) throw ArgumentError("kmeans: k must be positive");
  if (k > n) throw ArgumentError("kmeans: k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " points");
  Rng rng = make_rng(seed);
  KMeansResult res;
  res.centroids = detail::kmeanspp_seed(x, k, rng);
  res.labels.assign(n, -1);
  std::vector<double> d2(n);
  for (std::size_t it = 0; it < std::max<std::size_t>(max_iters, 1); ++it) {
    bool changed = false;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int lbl = static_cast<int>(detail::nearest_centroid(x.row(i), res.centroids, &d2[i]));
      changed |= lbl != res.labels[i];
      res.labels[i] = lbl;
      sse += d2[i];
    }
    // Empty clusters take the worst-fit point; this never raises the SSE.
    std::vector<std::size_t> counts(k, 0);
    for (int l : res.labels) ++counts[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      const std::size_t far = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
      std::copy(x.row(far).begin(), x.row(far).end(), res.centroids.row(c).begin());
      --counts[static_cast<std::size_t>(res.labels[far])];
      ++counts[c];
      changed |= d2[far] > 0.0;
      sse -= d2[far];
      d2[far] = 0.0;
      res.labels[far] = static_cast<int>(c);
    }
    res.sse_history.push_back(sse);
    res.iterations = it + 1;
    if (!changed) break;
    DenseMatrix sums(k, x.cols());
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(static_cast<std::size_t>(res.labels[i]));
      const auto xi = x.row(i);
      for (std::size_t t = 0; t < x.cols(); ++t) s[t] += xi[t];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t t = 0; t < x.cols(); ++t) res.centroids(c, t) = sums(c, t) / static_cast<double>(counts[c]);
    }
  }
  return res;
}

// Best of `restarts` independent runs by final SSE; restart r is seeded with
// derive_seed(seed, r). Overlapping data has many local optima, so a single run
// makes ACC needlessly noisy.
inline KMeansResult kmeans_restarts(const DenseMatrix& x, std::size_t k, std::size_t max_iters, std::uint64_t seed,
                                    std::size_t restarts) {
  if (restarts == 0) throw ArgumentError("kmeans: restarts must be positive");
  KMeansResult best = kmeans(x, k, max_iters, derive_seed(seed, 0));
  for (std::size_t r = 1; r < restarts; ++r) {
    KMeansResult cur = kmeans(x, k, max_iters, derive_seed(seed, r));
    if (cur.sse() < best.sse()) best = std::move(cur);
  }
  return best;
}

// Minimum-cost perfect assignment on a square cost matrix (shortest augmenting path
// with potentials, O(n^3)). Returns col_of_row.
inline std::vector<std::size_t> hungarian_min_cost(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of_row(n);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  }
  return col_of_row;
}

namespace detail {

// Maps arbitrary label values to 0..n-1 in sorted order.
inline std::vector<std::size_t> compact_labels(std::span<const int> labels, std::size_t& n_distinct) {
  std::map<int, std::size_t> ids;
  for (int l : labels) ids.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [_, id] : ids) id = next++;
  n_distinct = next;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
  return out;
}

struct Contingency {
  std::vector<std::vector<std::size_t>> table;  // [true][pred]
  std::size_t n_true = 0;
  std::size_t n_pred = 0;
};

inline Contingency contingency(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw ArgumentError("label vectors differ in length");
  if (truth.empty()) throw ArgumentError("label vectors are empty");
  Contingency c;
  const auto t = compact_labels(truth, c.n_true);
  const auto p = compact_labels(pred, c.n_pred);
  c.table.assign(c.n_true, std::vector<std::size_t>(c.n_pred, 0));
  for (std::size_t i = 0; i < t.size(); ++i) ++c.table[t[i]][p[i]];
  return c;
}

}  // namespace detail

// Fraction matched under the best one-to-one mapping of predicted clusters to classes.
inline double accuracy(std::span<const int> truth, std::span<const int> pred) {
  const auto c = detail::contingency(truth, pred);
  const std::size_t n = std::max(c.n_true, c.n_pred);
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < c.n_true; ++i) {
    for (std::size_t j = 0; j < c.n_pred; ++j) cost[i][j] = -static_cast<double>(c.table[i][j]);
  }
  const auto match = hungarian_min_cost(cost);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < c.n_true; ++i) {
    if (match[i] < c.n_pred) hits += c.table[i][match[i]];
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// I(T;P) / sqrt(H(T) H(P)), natural logs. Two single-cluster partitions score 1;
// any other case with a zero entropy scores 0.
inline double nmi(std::span<const int> truth, std::span<const int> pred) {
  const auto c = detail::contingency(truth, pred);
  const double n = static_cast<double>(truth.size());
  std::vector<double> rows(c.n_true, 0.0), cols(c.n_pred, 0.0);
  for (std::size_t i = 0; i < c.n_true; ++i) {
    for (std::size_t j = 0; j < c.n_pred; ++j) {
      rows[i] += static_cast<double>(c.table[i][j]);
      cols[j] += static_cast<double>(c.table[i][j]);
    }
  }
  auto entropy = [n](const std::vector<double>& counts) {
    double h = 0.0;
    for (double x : counts) {
      if (x > 0.0) h -= (x / n) * std::log(x / n);
    }
    return h;
  };
  const double ht = entropy(rows), hp = entropy(cols);
  if (c.n_true == 1 && c.n_pred == 1) return 1.0;
  if (ht <= 0.0 || hp <= 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t i = 0; i < c.n_true; ++i) {
    for (std::size_t j = 0; j < c.n_pred; ++j) {
      const double nij = static_cast<double>(c.table[i][j]);
      if (nij > 0.0) mi += (nij / n) * std::log(n * nij / (rows[i] * cols[j]));
    }
  }
  return std::clamp(mi / std::sqrt(ht * hp), 0.0, 1.0);
}

enum class DistanceMetric { Euclidean, CosineDistance };

inline DistanceMetric parse_distance_metric(std::string_view s) {
  if (s == "euclidean") return DistanceMetric::Euclidean;
  if (s == "cosine" || s == "cosine_distance") return DistanceMetric::CosineDistance;
  throw ConfigError("distance metric must be 'euclidean' or 'cosine_distance'");
}

inline double metric_distance(std::span<const double> a, std::span<const double> b, DistanceMetric m) {
  return m == DistanceMetric::Euclidean ? distance(a, b) : 1.0 - cosine_sim(a, b);
}

struct ClusterGeometry {
  std::vector<double> intra;  // mean centroid-to-member distance per cluster
  std::vector<double> inter;  // distance to the nearest other centroid
  double mean_intra = 0.0;
  double mean_inter = 0.0;
};

// Clusters are the label values 0..max(label); each must have at least one member.
inline ClusterGeometry cluster_geometry(const DenseMatrix& e, std::span<const int> labels,
                                        DistanceMetric metric = DistanceMetric::Euclidean) {
  if (labels.size() != e.rows()) throw ArgumentError("cluster_geometry: label count differs from row count");
  if (labels.empty()) throw ArgumentError("cluster_geometry: no instances");
  const int max_label = *std::max_element(labels.begin(), labels.end());
  if (*std::min_element(labels.begin(), labels.end()) < 0) throw ArgumentError("cluster_geometry: negative label");
  const std::size_t k = static_cast<std::size_t>(max_label) + 1;
  DenseMatrix centroids(k, e.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < e.rows(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++counts[c];
    for (std::size_t t = 0; t < e.cols(); ++t) centroids(c, t) += e(i, t);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) throw ArgumentError("cluster_geometry: cluster " + std::to_string(c) + " is empty");
    for (std::size_t t = 0; t < e.cols(); ++t) centroids(c, t) /= static_cast<double>(counts[c]);
  }
  ClusterGeometry g;
  g.intra.assign(k, 0.0);
  g.inter.assign(k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < e.rows(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    g.intra[c] += metric_distance(centroids.row(c), e.row(i), metric);
  }
  for (std::size_t c = 0; c < k; ++c) {
    g.intra[c] /= static_cast<double>(counts[c]);
    for (std::size_t o = 0; o < k; ++o) {
      if (o != c) g.inter[c] = std::min(g.inter[c], metric_distance(centroids.row(c), centroids.row(o), metric));
    }
    if (k == 1) g.inter[c] = 0.0;
  }
  g.mean_intra = std::accumulate(g.intra.begin(), g.intra.end(), 0.0) / static_cast<double>(k);
  g.mean_inter = std::accumulate(g.inter.begin(), g.inter.end(), 0.0) / static_cast<double>(k);
  return g;
}

struct SimilarityHistogram {
  std::vector<std::size_t> counts;  // equal-width bins over [-1, 1]
  std::vector<double> similarities;
  double mean = 0.0;

  [[nodiscard]] double bin_lower(std::size_t b) const {
    return -1.0 + 2.0 * static_cast<double>(b) / static_cast<double>(counts.size());
  }
  [[nodiscard]] double bin_upper(std::size_t b) const { return bin_lower(b + 1); }
};

inline std::size_t similarity_bin(double s, std::size_t bins) {
  const auto b = static_cast<std::ptrdiff_t>(std::floor((s + 1.0) / 2.0 * static_cast<double>(bins)));
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1));
}

// Row-wise cosine similarity between each original and its augmented view.
inline SimilarityHistogram aug_similarity_histogram(const DenseMatrix& e_orig, const DenseMatrix& e_aug,
                                                    std::size_t bins) {
  if (e_orig.rows() != e_aug.rows() || e_orig.cols() != e_aug.cols()) {
    throw DimensionError("aug_similarity_histogram: shapes differ");
  }
  if (bins == 0) throw ArgumentError("aug_similarity_histogram: bins must be positive");
  SimilarityHistogram h;
  h.counts.assign(bins, 0);
  h.similarities.reserve(e_orig.rows());
  for (std::size_t i = 0; i < e_orig.rows(); ++i) {
    const double s = cosine_sim(e_orig.row(i), e_aug.row(i));
    h.similarities.push_back(s);
    ++h.counts[similarity_bin(s, bins)];
  }
  if (!h.similarities.empty()) {
    h.mean = std::accumulate(h.similarities.begin(), h.similarities.end(), 0.0) /
             static_cast<double>(h.similarities.size());
  }
  return h;
}

}  // namespace sccl
