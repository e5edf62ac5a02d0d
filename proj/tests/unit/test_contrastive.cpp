#include <cmath>
#include <numbers>
#include <numeric>

#include "catch_amalgamated.hpp"
#include "oracles.hpp"
#include "pipeline_oracle.hpp"
#include "sccl/contrastive.hpp"
#include "sccl/rng.hpp"

using namespace sccl;
using Catch::Matchers::WithinAbs;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  DenseMatrix m(r, c);
  for (double& v : m.values()) v = standard_normal(rng);
  return m;
}

DenseMatrix swap_rows(DenseMatrix m, std::size_t a, std::size_t b) {
  for (std::size_t c = 0; c < m.cols(); ++c) std::swap(m(a, c), m(b, c));
  return m;
}

}  // namespace

TEST_CASE("cosine_sim examples") {
  const std::vector<double> a{1, 0}, b{0, 1}, c{3, 0};
  CHECK(cosine_sim(a, a) == 1.0);
  CHECK(cosine_sim(a, b) == 0.0);
  CHECK(cosine_sim(c, a) == 1.0);
  const std::vector<double> z{0, 0};
  CHECK_THROWS_AS(cosine_sim(a, z), DegenerateVectorError);
}

TEST_CASE("single pair has zero loss") {
  const ContrastiveResult r = instance_cl_loss(DenseMatrix{{1, 2, -1}, {-3, 0.5, 4}}, 0.5);
  CHECK(r.loss == 0.0);
  CHECK(r.per_instance == std::vector<double>{0.0, 0.0});
  for (double g : r.grad_z.values()) CHECK_THAT(g, WithinAbs(0.0, 1e-15));
}

TEST_CASE("two aligned pairs: loss is log(1 + 2 e^-2)") {
  const DenseMatrix z{{1, 0}, {1, 0}, {0, 1}, {0, 1}};
  const ContrastiveResult r = instance_cl_loss(z, 0.5);
  const double expected = std::log(1.0 + 2.0 * std::exp(-2.0));
  CHECK_THAT(r.loss, WithinAbs(expected, 1e-12));
  CHECK_THAT(r.loss, WithinAbs(0.2395, 1e-4));  // 0.239545 to four figures
  for (double l : r.per_instance) CHECK_THAT(l, WithinAbs(expected, 1e-12));
  CHECK_THAT(r.loss, WithinAbs(oracle::ntxent(oracle::to_mat(z), 0.5), 1e-12));
}

TEST_CASE("loss is the mean of per_instance and matches the unshifted formula") {
  Rng rng = make_rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 * (1 + t % 4);
    const DenseMatrix z = random_matrix(n, 2 + t % 4, rng);
    const double tau = 0.2 + 0.1 * (t % 5);
    const ContrastiveResult r = instance_cl_loss(z, tau);
    const double mean = std::accumulate(r.per_instance.begin(), r.per_instance.end(), 0.0) / double(n);
    CHECK_THAT(r.loss, WithinAbs(mean, 1e-14));
    const oracle::Mat zm = oracle::to_mat(z);
    for (std::size_t a = 0; a < n; ++a) CHECK_THAT(r.per_instance[a], WithinAbs(oracle::ntxent_anchor(zm, a, tau), 1e-10));
  }
}

TEST_CASE("row scaling leaves the loss unchanged") {
  Rng rng = make_rng(4);
  const DenseMatrix z = random_matrix(6, 3, rng);
  const ContrastiveResult base = instance_cl_loss(z, 0.5);
  const ContrastiveResult seven = instance_cl_loss(scaled(z, 7.0), 0.5);
  CHECK_THAT(seven.loss, WithinAbs(base.loss, 1e-12));
  DenseMatrix mixed = z;
  for (std::size_t r = 0; r < mixed.rows(); ++r) {
    const double s = 0.1 + 3.0 * uniform01(rng);
    for (double& v : mixed.row(r)) v *= s;
  }
  const ContrastiveResult m = instance_cl_loss(mixed, 0.5);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK_THAT(seven.per_instance[i], WithinAbs(base.per_instance[i], 1e-12));
    CHECK_THAT(m.per_instance[i], WithinAbs(base.per_instance[i], 1e-12));
  }
}

TEST_CASE("swapping the two views of a pair leaves the loss unchanged") {
  Rng rng = make_rng(5);
  const DenseMatrix z = random_matrix(8, 4, rng);
  const double base = instance_cl_loss(z, 0.5).loss;
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK_THAT(instance_cl_loss(swap_rows(z, 2 * i, 2 * i + 1), 0.5).loss, WithinAbs(base, 1e-12));
  }
}

TEST_CASE("permuting pair blocks permutes per_instance") {
  Rng rng = make_rng(6);
  const DenseMatrix z = random_matrix(8, 3, rng);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  DenseMatrix zp(8, 3);
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t v = 0; v < 2; ++v) {
      std::copy(z.row(2 * perm[b] + v).begin(), z.row(2 * perm[b] + v).end(), zp.row(2 * b + v).begin());
    }
  }
  const ContrastiveResult a = instance_cl_loss(z, 0.3);
  const ContrastiveResult b = instance_cl_loss(zp, 0.3);
  CHECK_THAT(b.loss, WithinAbs(a.loss, 1e-12));
  for (std::size_t blk = 0; blk < 4; ++blk) {
    for (std::size_t v = 0; v < 2; ++v) {
      CHECK_THAT(b.per_instance[2 * blk + v], WithinAbs(a.per_instance[2 * perm[blk] + v], 1e-12));
    }
  }
}

TEST_CASE("grad_z matches finite differences") {
  Rng rng = make_rng(7);
  for (int t = 0; t < 25; ++t) {
    const std::size_t n = 2 * (1 + t % 4), d = 1 + t % 5;
    DenseMatrix z = random_matrix(n, d, rng);
    const double tau = 0.5;
    const ContrastiveResult r = instance_cl_loss(z, tau);
    oracle::Mat zm = oracle::to_mat(z);
    std::vector<double*> ptrs;
    for (auto& row : zm) {
      for (double& v : row) ptrs.push_back(&v);
    }
    const oracle::Vec fd = oracle::central_difference([&] { return oracle::ntxent(zm, tau); }, ptrs);
    const oracle::Vec an(r.grad_z.values().begin(), r.grad_z.values().end());
    CHECK(oracle::max_rel_err(an, fd) < 1e-5);
  }
}

TEST_CASE("loss decreases as positives align and negatives spread") {
  // pair 0 at angles +-th around +x, pair 1 around -x; th: pi/2 -> 0.
  // positive cos = cos 2th rises to 1, negatives fall to -1.
  const double tau = 0.5;
  double prev = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= 40; ++s) {
    const double th = (std::numbers::pi / 2) * (1.0 - s / 40.0);
    const double c = std::cos(th), sn = std::sin(th);
    const DenseMatrix z{{c + 1e-3, sn}, {c + 1e-3, -sn}, {-c - 1e-3, sn}, {-c - 1e-3, -sn}};
    const double l = instance_cl_loss(z, tau).loss;
    CHECK(l < prev);
    prev = l;
  }
  CHECK_THAT(prev, WithinAbs(std::log(1.0 + 2.0 * std::exp(-2.0 / tau)), 1e-5));
}

TEST_CASE("instance_cl_loss errors") {
  CHECK_THROWS_AS(instance_cl_loss(DenseMatrix(3, 2, 1.0), 0.5), ContractError);
  CHECK_THROWS_AS(instance_cl_loss(DenseMatrix{{1, 0}, {0, 0}}, 0.5), DegenerateVectorError);
  CHECK_THROWS_AS(instance_cl_loss(DenseMatrix{{1, 0}, {0, 1}}, 0.0), ArgumentError);
}
