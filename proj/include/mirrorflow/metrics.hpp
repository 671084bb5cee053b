// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mirrorflow/geometry.hpp"

namespace mf {

struct MetricReport {
  double mmd_squared = 0.0;
  double kl = 0.0;
  std::optional<double> w2;
  double feasibility = 0.0;
  std::int64_t n_gen = 0;
  std::int64_t n_ref = 0;
  double kernel_bandwidth = 0.0;
  int kl_k = 0;
};

// Biased V-statistic MMD^2 with RBF kernel k(a,b) = exp(-||a-b||^2/(2s^2)).
// When `bandwidth` is absent, s is the median pairwise distance of the pooled
// batches (subsampled deterministically above 4096 points). `bandwidth_used`
// receives the s actually applied.
double mmd_squared(const Mat& X, const Mat& Y,
                   std::optional<double> bandwidth = std::nullopt,
                   double* bandwidth_used = nullptr);

// k-nearest-neighbor KL estimate
//   (d/n) sum_i log(nu_k(i)/rho_k(i)) + log(m/(n-1)),
// rho_k within P (self excluded), nu_k into Q; radii floored at 1e-12.
double kl_knn(const Mat& P, const Mat& Q, int k);

// Empirical 2-Wasserstein distance between equal-size batches: square root of
// the mean optimal-assignment squared Euclidean cost. Capped at n = 1024.
double w2_exact(const Mat& X, const Mat& Y);

// Exact solver for the square linear assignment problem (shortest augmenting
// paths with dual potentials); returns the minimal total cost and fills
// row_to_col. O(n^3).
double solve_assignment(const Mat& cost, std::vector<int>& row_to_col);

// Fraction of rows strictly inside the domain.
double feasibility_rate(const ConvexDomain& domain, const Mat& X);

}  // namespace mf
