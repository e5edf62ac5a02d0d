#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "sccl/errors.hpp"
#include "sccl/matrix.hpp"

namespace sccl {

inline double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine_sim: length mismatch");
  const double na = norm(a), nb = norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw DegenerateVectorError("cosine_sim: zero-norm vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

struct ContrastiveResult {
  double loss = 0.0;
  DenseMatrix grad_z;
  std::vector<double> per_instance;
};

// NT-Xent over 2M views with positives at rows (2i, 2i+1). For anchor a with positive
// p = a ^ 1, l_a = -s_ap + log sum_{j != a} exp(s_aj), s = cos / tau. The positive is part
// of the denominator. The loss is the mean over all 2M anchors.
inline ContrastiveResult instance_cl_loss(const DenseMatrix& z, double tau) {
  const std::size_t n = z.rows();
  if (n < 2 || n % 2 != 0) throw ContractError("instance_cl_loss: need an even row count >= 2");
  if (!(tau > 0.0)) throw ArgumentError("instance_cl_loss: tau must be > 0");
  const std::size_t d = z.cols();

  DenseMatrix u(n, d);
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = norm(z.row(i));
    if (!(norms[i] > 0.0)) throw DegenerateVectorError("instance_cl_loss: zero-norm row " + std::to_string(i));
    for (std::size_t c = 0; c < d; ++c) u(i, c) = z(i, c) / norms[i];
  }

  DenseMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = dot(u.row(i), u.row(j)) / tau;
      s(i, j) = v;
      s(j, i) = v;
    }
  }

  ContrastiveResult res;
  res.per_instance.resize(n);
  // G(a, j) = dL/ds_aj with anchor a in row a.
  DenseMatrix g(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t pos = a ^ 1U;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != a) mx = std::max(mx, s(a, j));
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != a) denom += std::exp(s(a, j) - mx);
    }
    const double lse = mx + std::log(denom);
    res.per_instance[a] = lse - s(a, pos);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      g(a, j) = inv_n * (std::exp(s(a, j) - lse) - (j == pos ? 1.0 : 0.0));
    }
  }
  double total = 0.0;
  for (double l : res.per_instance) total += l;
  res.loss = total * inv_n;

  // dL/du_i = sum_j (G_ij + G_ji) u_j / tau, then through u = z / |z|.
  res.grad_z = DenseMatrix(n, d);
  std::vector<double> gu(d);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(gu.begin(), gu.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = (g(i, j) + g(j, i)) / tau;
      if (w == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) gu[c] += w * u(j, c);
    }
    const double radial = dot(gu, u.row(i));
    for (std::size_t c = 0; c < d; ++c) res.grad_z(i, c) = (gu[c] - radial * u(i, c)) / norms[i];
  }
  return res;
}

}  // namespace sccl
