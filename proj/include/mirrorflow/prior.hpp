// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "mirrorflow/geometry.hpp"
#include "mirrorflow/rng.hpp"

namespace mf {

// Standard Student-t prior t_{d,nu}, density proportional to
// (1 + ||x||^2/nu)^{-(nu+d)/2}. Heavy tails dominate bounded targets, which
// keeps conditional velocities controlled near t = 1.
struct StudentTPrior {
  int dim = 0;
  double nu = 10.0;

  StudentTPrior(int dim_, double nu_);

  // d*nu/(nu-2) for nu > 2, +inf otherwise.
  double second_moment() const;
};

enum class PriorKind { StudentT, Gaussian };

// Prior used by the dual-space flow; Gaussian is the baseline comparison.
struct Prior {
  PriorKind kind = PriorKind::StudentT;
  int dim = 0;
  double nu = 10.0;  // StudentT only

  static Prior student_t(int dim, double nu) { return {PriorKind::StudentT, dim, nu}; }
  static Prior gaussian(int dim) { return {PriorKind::Gaussian, dim, 0.0}; }

  double second_moment() const;
  // log density up to an additive constant (shared across evaluations).
  double log_density_unnormalized(const Vec& x) const;
};

// n i.i.d. draws, one row per sample: z = g * sqrt(nu/q) with g standard
// normal and q chi-square(nu). Deterministic given seed.
Mat sample_student_t(const StudentTPrior& prior, std::int64_t n, std::uint64_t seed);

Mat sample_prior(const Prior& prior, std::int64_t n, Rng& rng);
Mat sample_prior(const Prior& prior, std::int64_t n, std::uint64_t seed);

// Diagonal-covariance Gaussian mixture truncated to a convex domain.
// Sampling retries the whole (component, draw) pair on rejection, so the
// component occupancy follows the acceptance-renormalized weights.
class TruncatedMixtureTarget {
 public:
  struct Component {
    Vec mean;
    Vec diag_cov;  // positive variances
    double weight = 0.0;
  };

  // Validates weights, and estimates per-component acceptance with 1e4
  // proposals each; any estimated rate below 1e-3 is a SamplingError.
  TruncatedMixtureTarget(std::vector<Component> components, ConvexDomain domain);

  const std::vector<Component>& components() const { return components_; }
  const ConvexDomain& domain() const { return domain_; }
  const Vec& weights() const { return weights_; }
  // Construction-time acceptance estimates, one per component.
  const Vec& acceptance_estimates() const { return acceptance_; }

  int dim() const { return domain_.dim(); }

 private:
  std::vector<Component> components_;
  ConvexDomain domain_;
  Vec weights_;
  Vec acceptance_;
};

// n feasible draws; `labels`, when non-null, receives the chosen component
// per sample. Throws SamplingError if acceptance falls below 1e-3 over a
// 1e5-proposal window.
Mat sample_truncated_mixture(const TruncatedMixtureTarget& target, std::int64_t n,
                             std::uint64_t seed, std::vector<int>* labels = nullptr);

// Discrete target on finitely many atoms; enables exact conditional
// expectations in the oracle velocity field.
struct FiniteAtomTarget {
  Mat atoms;    // k x d, one atom per row
  Vec weights;  // probability vector of length k

  FiniteAtomTarget(Mat atoms_, Vec weights_);

  int dim() const { return static_cast<int>(atoms.cols()); }
  int num_atoms() const { return static_cast<int>(atoms.rows()); }
  double second_moment() const;  // sum_i w_i ||a_i||^2
};

Mat sample_atoms(const FiniteAtomTarget& target, std::int64_t n, std::uint64_t seed);

}  // namespace mf
