// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#include "mirrorflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mirrorflow/errors.hpp"

namespace mf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Median pairwise distance over at most `cap` pooled rows (strided subsample
// above the cap, so the choice is deterministic).
double median_pairwise_distance(const Mat& X, const Mat& Y, Eigen::Index cap = 4096) {
  const Eigen::Index total = X.rows() + Y.rows();
  const Eigen::Index stride = (total + cap - 1) / cap;
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < total; i += stride) idx.push_back(i);
  const auto s = static_cast<Eigen::Index>(idx.size());

  auto row = [&](Eigen::Index i) {
    return i < X.rows() ? X.row(i) : Y.row(i - X.rows());
  };
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(s) * (s - 1) / 2);
  for (Eigen::Index a = 0; a < s; ++a)
    for (Eigen::Index b = a + 1; b < s; ++b)
      dists.push_back((row(idx[a]) - row(idx[b])).norm());
  if (dists.empty()) return 1.0;
  const std::size_t mid = (dists.size() - 1) / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid),
                   dists.end());
  const double med = dists[mid];
  return med > 1e-300 ? med : 1.0;
}

double kernel_sum(const Mat& A, const Mat& B, double inv_two_sigma2) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < B.rows(); ++j)
      acc += std::exp(-(A.row(i) - B.row(j)).squaredNorm() * inv_two_sigma2);
    total += acc;
  }
  return total;
}

}  // namespace

double mmd_squared(const Mat& X, const Mat& Y, std::optional<double> bandwidth,
                   double* bandwidth_used) {
  if (X.rows() < 1 || Y.rows() < 1)
    throw PreconditionError("mmd_squared: batches must be nonempty");
  if (X.cols() != Y.cols())
    throw DimensionError("mmd_squared: batch dimensions differ");

  const double sigma = bandwidth ? *bandwidth : median_pairwise_distance(X, Y);
  if (!(sigma > 0.0)) throw PreconditionError("mmd_squared: bandwidth must be positive");
  if (bandwidth_used) *bandwidth_used = sigma;
  const double c = 1.0 / (2.0 * sigma * sigma);

  const auto n = static_cast<double>(X.rows());
  const auto m = static_cast<double>(Y.rows());
  const double kxx = kernel_sum(X, X, c) / (n * n);
  const double kyy = kernel_sum(Y, Y, c) / (m * m);
  const double kxy = kernel_sum(X, Y, c) / (n * m);
  return kxx + kyy - 2.0 * kxy;
}

namespace {

// k-th nearest distance from x to a sorted array, optionally skipping one
// exact self position; two-pointer expansion around the insertion point.
double knn_distance_sorted(const std::vector<double>& sorted, double x, int k,
                           std::ptrdiff_t skip_index) {
  const auto n = static_cast<std::ptrdiff_t>(sorted.size());
  std::ptrdiff_t hi = std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
  std::ptrdiff_t lo = hi - 1;
  double dist = 0.0;
  for (int found = 0; found < k;) {
    const double dl = lo >= 0 ? x - sorted[static_cast<std::size_t>(lo)]
                              : std::numeric_limits<double>::infinity();
    const double dr = hi < n ? sorted[static_cast<std::size_t>(hi)] - x
                             : std::numeric_limits<double>::infinity();
    if (dl <= dr) {
      if (lo != skip_index) {
        dist = dl;
        ++found;
      }
      --lo;
    } else {
      if (hi != skip_index) {
        dist = dr;
        ++found;
      }
      ++hi;
    }
  }
  return dist;
}

}  // namespace

double kl_knn(const Mat& P, const Mat& Q, int k) {
  const Eigen::Index n = P.rows();
  const Eigen::Index m = Q.rows();
  if (P.cols() != Q.cols()) throw DimensionError("kl_knn: batch dimensions differ");
  if (k < 1) throw PreconditionError("kl_knn: k must be >= 1");
  if (n < k + 1 || m < k + 1)
    throw PreconditionError("kl_knn: both batches need at least k+1 points");

  const double d = static_cast<double>(P.cols());
  const double floor_r = 1e-12;
  double acc = 0.0;

  if (P.cols() == 1) {
    // Sorted two-pointer scan instead of the quadratic loop.
    std::vector<double> ps(static_cast<std::size_t>(n)), qs(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < n; ++i) ps[static_cast<std::size_t>(i)] = P(i, 0);
    for (Eigen::Index j = 0; j < m; ++j) qs[static_cast<std::size_t>(j)] = Q(j, 0);
    std::vector<double> ps_sorted = ps;
    std::sort(ps_sorted.begin(), ps_sorted.end());
    std::sort(qs.begin(), qs.end());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = ps[static_cast<std::size_t>(i)];
      // Skip one occurrence of x itself within P.
      const std::ptrdiff_t self =
          std::lower_bound(ps_sorted.begin(), ps_sorted.end(), x) - ps_sorted.begin();
      const double rho = std::max(knn_distance_sorted(ps_sorted, x, k, self), floor_r);
      const double nu = std::max(knn_distance_sorted(qs, x, k, -1), floor_r);
      acc += std::log(nu / rho);
    }
  } else {
    std::vector<double> buf;
    for (Eigen::Index i = 0; i < n; ++i) {
      buf.clear();
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) buf.push_back((P.row(i) - P.row(j)).squaredNorm());
      std::nth_element(buf.begin(), buf.begin() + (k - 1), buf.end());
      const double rho =
          std::max(std::sqrt(buf[static_cast<std::size_t>(k - 1)]), floor_r);

      buf.clear();
      for (Eigen::Index j = 0; j < m; ++j)
        buf.push_back((P.row(i) - Q.row(j)).squaredNorm());
      std::nth_element(buf.begin(), buf.begin() + (k - 1), buf.end());
      const double nu =
          std::max(std::sqrt(buf[static_cast<std::size_t>(k - 1)]), floor_r);

      acc += std::log(nu / rho);
    }
  }
  return d / static_cast<double>(n) * acc +
         std::log(static_cast<double>(m) / static_cast<double>(n - 1));
}

double solve_assignment(const Mat& cost, std::vector<int>& row_to_col) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionError("solve_assignment: cost matrix must be square");

  // Shortest augmenting path with dual potentials (1-based sentinels).
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  row_to_col.assign(n, -1);
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
    total += cost(p[j] - 1, j - 1);
  }
  return total;
}

double w2_exact(const Mat& X, const Mat& Y) {
  const Eigen::Index n = X.rows();
  if (Y.rows() != n) throw PreconditionError("w2_exact: batches must have equal size");
  if (X.cols() != Y.cols()) throw DimensionError("w2_exact: batch dimensions differ");
  if (n < 1) throw PreconditionError("w2_exact: batches must be nonempty");
  if (n > 1024) throw PreconditionError("w2_exact: size cap is 1024");

  Mat cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      cost(i, j) = (X.row(i) - Y.row(j)).squaredNorm();
  std::vector<int> assignment;
  const double total = solve_assignment(cost, assignment);
  return std::sqrt(std::max(total, 0.0) / static_cast<double>(n));
}

double feasibility_rate(const ConvexDomain& domain, const Mat& X) {
  if (X.rows() == 0) return 0.0;
  std::int64_t inside = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    if (domain.contains(X.row(i).transpose())) ++inside;
  return static_cast<double>(inside) / static_cast<double>(X.rows());
}

}  // namespace mf
