#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sccl/augment.hpp"
#include "sccl/dataset.hpp"
#include "sccl/errors.hpp"
#include "sccl/rng.hpp"

namespace sccl {

// Cluster sizes for k clusters totalling k * n_per_cluster, geometric from largest
// (index 0) to smallest with largest / smallest == imbalance_ratio.
inline std::vector<std::size_t> geometric_cluster_sizes(std::size_t k, std::size_t n_per_cluster,
                                                        double imbalance_ratio) {
  const std::size_t total = k * n_per_cluster;
  std::vector<double> w(k);
  for (std::size_t c = 0; c < k; ++c) {
    w[c] = std::pow(imbalance_ratio, -static_cast<double>(c) / static_cast<double>(k - 1));
  }
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::size_t> sizes(k);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double exact = static_cast<double>(total) * w[c] / wsum;
    sizes[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += sizes[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  // Largest remainder; ties go to the lower cluster index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++sizes[remainders[i].second];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) {
      ++sizes[c];
      --sizes[0];
    }
  }
  return sizes;
}

// Centroid c sits at (separation / sqrt 2) * basis vector c, so every pair is exactly
// `separation` apart. With more clusters than dimensions, random unit directions are used.
inline DenseMatrix synthetic_centroids(std::size_t k, std::size_t dim, double separation, std::uint64_t seed) {
  DenseMatrix mu(k, dim);
  const double scale = separation / std::sqrt(2.0);
  if (k <= dim) {
    for (std::size_t c = 0; c < k; ++c) mu(c, c) = scale;
    return mu;
  }
  Rng rng = make_rng(derive_seed(seed, 11));
  for (std::size_t c = 0; c < k; ++c) {
    auto row = mu.row(c);
    for (double& v : row) v = standard_normal(rng);
    const double n = norm(row);
    for (double& v : row) v *= scale / n;
  }
  return mu;
}

inline Dataset make_synthetic(std::size_t k, std::size_t n_per_cluster, std::size_t dim, double separation,
                              double noise_sigma, double imbalance_ratio, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("make_synthetic: k must be >= 2");
  if (dim < 2) throw ArgumentError("make_synthetic: dim must be >= 2");
  if (n_per_cluster < 1) throw ArgumentError("make_synthetic: n_per_cluster must be >= 1");
  if (!(separation >= 0.0)) throw ArgumentError("make_synthetic: separation must be >= 0");
  if (!(noise_sigma > 0.0)) throw ArgumentError("make_synthetic: noise_sigma must be > 0");
  if (!(imbalance_ratio >= 1.0)) throw ArgumentError("make_synthetic: imbalance_ratio must be >= 1");

  const auto sizes = geometric_cluster_sizes(k, n_per_cluster, imbalance_ratio);
  const DenseMatrix mu = synthetic_centroids(k, dim, separation, seed);
  const std::size_t n = k * n_per_cluster;

  Dataset ds;
  ds.vectors = DenseMatrix(n, dim);
  ds.labels = std::vector<int>(n);
  ds.ids.reserve(n);
  Rng rng = make_rng(derive_seed(seed, 1));
  std::size_t i = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t s = 0; s < sizes[c]; ++s, ++i) {
      auto row = ds.vectors.row(i);
      for (std::size_t d = 0; d < dim; ++d) row[d] = mu(c, d) + noise_sigma * standard_normal(rng);
      (*ds.labels)[i] = static_cast<int>(c);
      ds.ids.push_back("s" + std::to_string(i));
    }
  }

  const Augmenter aug(AugmentSpec::gaussian_noise(AugmentSpec{}.strength, noise_sigma));
  Rng arng = make_rng(derive_seed(seed, 2));
  ds.aug1 = DenseMatrix(n, dim);
  ds.aug2 = DenseMatrix(n, dim);
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = ds.vectors.row(r);
    auto [a1, a2] = aug.augment_pair(Sample(std::vector<double>(src.begin(), src.end())), arng);
    const auto& v1 = std::get<std::vector<double>>(a1);
    const auto& v2 = std::get<std::vector<double>>(a2);
    std::copy(v1.begin(), v1.end(), ds.aug1->row(r).begin());
    std::copy(v2.begin(), v2.end(), ds.aug2->row(r).begin());
  }
  return ds;
}

// Topic-mixture short-text corpus. Each document draws words from its topic's
// vocabulary with probability topic_prob and from a shared vocabulary otherwise.
// Vectors are the hashing features of each text; no augmentations are precomputed.
struct SyntheticTextSpec {
  std::size_t k = 4;
  std::size_t n_per_cluster = 50;
  std::size_t words_per_doc = 8;
  std::size_t topic_vocab = 30;
  std::size_t shared_vocab = 60;
  double topic_prob = 0.6;
  std::size_t dim = 256;
  std::uint64_t seed = 0;
};

inline Dataset make_synthetic_text(const SyntheticTextSpec& spec) {
  if (spec.k < 2 || spec.n_per_cluster < 1 || spec.words_per_doc < 1 || spec.topic_vocab < 1 ||
      spec.shared_vocab < 1) {
    throw ArgumentError("make_synthetic_text: counts must be positive and k >= 2");
  }
  Rng wrng = make_rng(derive_seed(spec.seed, 21));
  auto pseudo_word = [&wrng] {
    const std::size_t len = 4 + uniform_index(wrng, 5);
    std::string w;
    for (std::size_t i = 0; i < len; ++i) w += static_cast<char>('a' + uniform_index(wrng, 26));
    return w;
  };
  std::vector<std::vector<std::string>> topic_words(spec.k);
  for (auto& words : topic_words) {
    for (std::size_t i = 0; i < spec.topic_vocab; ++i) words.push_back(pseudo_word());
  }
  std::vector<std::string> shared;
  for (std::size_t i = 0; i < spec.shared_vocab; ++i) shared.push_back(pseudo_word());

  const std::size_t n = spec.k * spec.n_per_cluster;
  Dataset ds;
  ds.vectors = DenseMatrix(n, spec.dim);
  ds.labels = std::vector<int>(n);
  Rng rng = make_rng(derive_seed(spec.seed, 22));
  std::size_t i = 0;
  for (std::size_t c = 0; c < spec.k; ++c) {
    for (std::size_t s = 0; s < spec.n_per_cluster; ++s, ++i) {
      TokenSeq doc;
      for (std::size_t w = 0; w < spec.words_per_doc; ++w) {
        if (bernoulli(rng, spec.topic_prob)) doc.push_back(topic_words[c][uniform_index(rng, spec.topic_vocab)]);
        else doc.push_back(shared[uniform_index(rng, spec.shared_vocab)]);
      }
      const auto v = hashing_featurize(doc, spec.dim);
      std::copy(v.begin(), v.end(), ds.vectors.row(i).begin());
      (*ds.labels)[i] = static_cast<int>(c);
      ds.ids.push_back("t" + std::to_string(i));
      ds.texts.push_back(join_tokens(doc));
    }
  }
  return ds;
}

}  // namespace sccl
