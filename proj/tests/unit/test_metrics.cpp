#include <cmath>
#include <numbers>

#include "catch_amalgamated.hpp"
#include "oracles.hpp"
#include "sccl/metrics.hpp"
#include "sccl/synthetic.hpp"

using namespace sccl;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<int> random_labels(std::size_t n, int k, Rng& rng) {
  std::vector<int> v(n);
  for (int& x : v) x = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(k)));
  return v;
}

std::vector<int> relabel(const std::vector<int>& v, const std::vector<int>& map) {
  std::vector<int> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = map[static_cast<std::size_t>(v[i])];
  return out;
}

DenseMatrix rotate_translate(const DenseMatrix& e, double theta, double dx, double dy) {
  DenseMatrix out(e.rows(), 2);
  for (std::size_t r = 0; r < e.rows(); ++r) {
    out(r, 0) = std::cos(theta) * e(r, 0) - std::sin(theta) * e(r, 1) + dx;
    out(r, 1) = std::sin(theta) * e(r, 0) + std::cos(theta) * e(r, 1) + dy;
  }
  return out;
}

}  // namespace

TEST_CASE("kmeans: k distinct points give zero SSE") {
  const DenseMatrix x{{0, 0}, {4, 1}, {-3, 2}, {9, 9}};
  const KMeansResult r = kmeans(x, 4, 50, 1);
  CHECK(r.sse() == 0.0);
  std::vector<int> sorted = r.labels;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("kmeans: identical points with k = 2") {
  const DenseMatrix x(6, 3, 1.5);
  const KMeansResult r = kmeans(x, 2, 50, 2);
  CHECK(r.sse() == 0.0);
  CHECK(r.centroids.rows() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    for (double v : r.centroids.row(k)) CHECK(v == 1.5);
  }
}

TEST_CASE("kmeans: well separated blobs are recovered exactly") {
  const Dataset ds = make_synthetic(2, 100, 3, 30.0, 1.0, 1.0, 4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const KMeansResult r = kmeans(ds.vectors, 2, 100, seed);
    CHECK(accuracy(*ds.labels, r.labels) == 1.0);
  }
}

TEST_CASE("kmeans: SSE never increases across Lloyd iterations") {
  Rng rng = make_rng(5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset ds = make_synthetic(5, 40, 4, 1.5, 1.0, 2.0, seed);
    const KMeansResult r = kmeans(ds.vectors, 3 + seed % 5, 100, seed);
    for (std::size_t i = 1; i < r.sse_history.size(); ++i) CHECK(r.sse_history[i] <= r.sse_history[i - 1] + 1e-9);
  }
}

TEST_CASE("kmeans: errors and determinism") {
  const DenseMatrix x{{0, 0}, {1, 1}};
  CHECK_THROWS_AS(kmeans(x, 3, 10, 0), ArgumentError);
  CHECK_THROWS_AS(kmeans_restarts(x, 2, 10, 0, 0), ArgumentError);
  const Dataset ds = make_synthetic(3, 30, 4, 2.0, 1.0, 1.0, 6);
  CHECK(kmeans(ds.vectors, 3, 100, 9).labels == kmeans(ds.vectors, 3, 100, 9).labels);
}

TEST_CASE("kmeans_restarts keeps the lowest SSE run") {
  const Dataset ds = make_synthetic(6, 30, 3, 1.5, 1.0, 1.0, 7);
  const KMeansResult best = kmeans_restarts(ds.vectors, 6, 100, 3, 8);
  for (std::uint64_t r = 0; r < 8; ++r) CHECK(best.sse() <= kmeans(ds.vectors, 6, 100, derive_seed(3, r)).sse());
}

TEST_CASE("accuracy examples") {
  const std::vector<int> t{0, 0, 1, 1};
  CHECK(accuracy(t, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(accuracy(t, std::vector<int>{1, 0, 0, 0}) == 0.75);
  CHECK(accuracy(t, t) == 1.0);
  CHECK_THROWS_AS(accuracy(t, std::vector<int>{0, 1}), ArgumentError);
  // more clusters than classes
  CHECK(accuracy(t, std::vector<int>{0, 1, 2, 2}) == 0.75);
  // more classes than clusters
  CHECK(accuracy(std::vector<int>{0, 1, 2, 2}, std::vector<int>{0, 0, 1, 1}) == 0.75);
}

TEST_CASE("Hungarian accuracy equals the brute-force optimum") {
  Rng rng = make_rng(8);
  for (int t = 0; t < 300; ++t) {
    const int kt = 1 + static_cast<int>(uniform_index(rng, 6));
    const int kp = 1 + static_cast<int>(uniform_index(rng, 6));
    const std::size_t n = 1 + uniform_index(rng, 60);
    std::vector<int> truth = random_labels(n, kt, rng);
    std::vector<int> pred = random_labels(n, kp, rng);
    // correlate half the cases
    if (t % 2) {
      for (std::size_t i = 0; i < n; ++i) {
        if (bernoulli(rng, 0.6)) pred[i] = truth[i] % kp;
      }
    }
    CHECK(accuracy(truth, pred) == oracle::brute_force_accuracy(truth, pred));
  }
}

TEST_CASE("accuracy is invariant to relabeling either side") {
  Rng rng = make_rng(9);
  const std::vector<int> t = random_labels(50, 4, rng), p = random_labels(50, 4, rng);
  const double base = accuracy(t, p);
  const std::vector<int> map{2, 0, 3, 1};
  CHECK(accuracy(relabel(t, map), p) == base);
  CHECK(accuracy(t, relabel(p, map)) == base);
}

TEST_CASE("nmi examples") {
  const std::vector<int> t{0, 0, 1, 1};
  CHECK_THAT(nmi(t, t), WithinAbs(1.0, 1e-12));
  CHECK_THAT(nmi(t, std::vector<int>{0, 1, 0, 1}), WithinAbs(0.0, 1e-12));
  CHECK_THAT(nmi(t, std::vector<int>{1, 1, 0, 0}), WithinAbs(1.0, 1e-12));
  CHECK(nmi(std::vector<int>{3, 3, 3}, std::vector<int>{1, 1, 1}) == 1.0);
  CHECK(nmi(std::vector<int>{0, 0, 0, 0}, std::vector<int>{0, 1, 0, 1}) == 0.0);
  CHECK_THROWS_AS(nmi(t, std::vector<int>{0}), ArgumentError);
}

TEST_CASE("nmi matches a direct contingency computation") {
  // t = [0,0,0,1,1,2], p = [0,0,1,1,1,1]
  const std::vector<int> t{0, 0, 0, 1, 1, 2}, p{0, 0, 1, 1, 1, 1};
  const double n = 6;
  const double ht = -(3 / n * std::log(3 / n) + 2 / n * std::log(2 / n) + 1 / n * std::log(1 / n));
  const double hp = -(2 / n * std::log(2 / n) + 4 / n * std::log(4 / n));
  // joint cells: (0,0)=2 (0,1)=1 (1,1)=2 (2,1)=1
  double mi = 0.0;
  mi += 2 / n * std::log((2 / n) / ((3 / n) * (2 / n)));
  mi += 1 / n * std::log((1 / n) / ((3 / n) * (4 / n)));
  mi += 2 / n * std::log((2 / n) / ((2 / n) * (4 / n)));
  mi += 1 / n * std::log((1 / n) / ((1 / n) * (4 / n)));
  CHECK_THAT(nmi(t, p), WithinAbs(mi / std::sqrt(ht * hp), 1e-12));
}

TEST_CASE("nmi is symmetric, bounded and permutation invariant") {
  Rng rng = make_rng(10);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + uniform_index(rng, 50);
    const auto a = random_labels(n, 1 + static_cast<int>(uniform_index(rng, 5)), rng);
    const auto b = random_labels(n, 1 + static_cast<int>(uniform_index(rng, 5)), rng);
    const double v = nmi(a, b);
    CHECK_THAT(v, WithinAbs(nmi(b, a), 1e-12));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-12);
    CHECK_THAT(nmi(a, relabel(b, {4, 2, 0, 1, 3})), WithinAbs(v, 1e-12));
  }
}

TEST_CASE("cluster_geometry examples") {
  const DenseMatrix two{{0, 0}, {3, 4}};
  const ClusterGeometry g = cluster_geometry(two, std::vector<int>{0, 1});
  CHECK(g.intra == std::vector<double>{0.0, 0.0});
  CHECK(g.inter == std::vector<double>{5.0, 5.0});

  const DenseMatrix e{{0, 0}, {2, 0}, {10, 0}};
  const ClusterGeometry h = cluster_geometry(e, std::vector<int>{0, 0, 1});
  CHECK_THAT(h.intra[0], WithinAbs(1.0, 1e-15));
  CHECK_THAT(h.intra[1], WithinAbs(0.0, 1e-15));
  CHECK_THAT(h.inter[0], WithinAbs(9.0, 1e-15));
  CHECK_THAT(h.inter[1], WithinAbs(9.0, 1e-15));
  CHECK_THAT(h.mean_intra, WithinAbs(0.5, 1e-15));
  CHECK_THAT(h.mean_inter, WithinAbs(9.0, 1e-15));

  CHECK_THROWS_AS(cluster_geometry(e, std::vector<int>{0, 0, 2}), ArgumentError);
  CHECK_THROWS_AS(cluster_geometry(e, std::vector<int>{0, 1}), ArgumentError);
}

TEST_CASE("cluster_geometry: cosine distance") {
  const DenseMatrix e{{1, 0}, {1, 0}, {0, 2}};
  const ClusterGeometry g = cluster_geometry(e, std::vector<int>{0, 0, 1}, DistanceMetric::CosineDistance);
  CHECK_THAT(g.intra[0], WithinAbs(0.0, 1e-15));
  CHECK_THAT(g.inter[0], WithinAbs(1.0, 1e-15));
}

TEST_CASE("cluster_geometry is invariant to rotation and translation") {
  Rng rng = make_rng(11);
  DenseMatrix e(30, 2);
  for (double& v : e.values()) v = standard_normal(rng);
  const auto labels = random_labels(30, 3, rng);
  const ClusterGeometry a = cluster_geometry(e, labels);
  const ClusterGeometry b = cluster_geometry(rotate_translate(e, 0.7, 5.0, -3.0), labels);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK_THAT(b.intra[k], WithinAbs(a.intra[k], 1e-12));
    CHECK_THAT(b.inter[k], WithinAbs(a.inter[k], 1e-12));
  }
}

TEST_CASE("aug_similarity_histogram examples") {
  Rng rng = make_rng(12);
  DenseMatrix e(40, 3);
  for (double& v : e.values()) v = standard_normal(rng);

  const SimilarityHistogram same = aug_similarity_histogram(e, e, 10);
  CHECK(same.counts[9] == 40);
  CHECK_THAT(same.mean, WithinAbs(1.0, 1e-12));

  const SimilarityHistogram neg = aug_similarity_histogram(e, scaled(e, -1.0), 10);
  CHECK(neg.counts[0] == 40);

  // exactly orthogonal partners: (a, b, 0) vs (-b, a, 0)
  DenseMatrix o(40, 3);
  for (std::size_t r = 0; r < 40; ++r) {
    o(r, 0) = -e(r, 1);
    o(r, 1) = e(r, 0);
    e(r, 2) = 0.0;
  }
  const SimilarityHistogram orth = aug_similarity_histogram(e, o, 10);
  CHECK(orth.counts[5] + orth.counts[4] == 40);
  CHECK_THAT(orth.mean, WithinAbs(0.0, 1e-12));
  std::size_t total = 0;
  for (auto c : orth.counts) total += c;
  CHECK(total == 40);
  CHECK(orth.bin_lower(0) == -1.0);
  CHECK(orth.bin_upper(9) == 1.0);

  CHECK_THROWS_AS(aug_similarity_histogram(e, DenseMatrix(3, 3), 10), DimensionError);
  CHECK_THROWS_AS(aug_similarity_histogram(DenseMatrix{{0, 0, 0}}, DenseMatrix{{1, 0, 0}}, 4), DegenerateVectorError);
}
