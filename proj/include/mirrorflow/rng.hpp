// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace mf {

// Deterministic, splittable random generator (xoshiro256++ seeded through
// splitmix64). Distinct (seed, stream) pairs give independent sequences, so
// each sampling phase of a pipeline owns its own stream and phases can be
// reordered or parallelized without perturbing each other.
//
// All distribution transforms are implemented here rather than through
// <random> because the standard leaves normal/gamma sequences
// implementation-defined and the samplers carry a bit-exact determinism
// contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53-bit resolution.
  double uniform();
  // Uniform on (0,1]; safe as a log() argument.
  double uniform_open();
  double uniform(double lo, double hi);

  // Standard normal (Marsaglia polar, one spare cached).
  double normal();

  // Gamma(alpha, 1) via Marsaglia-Tsang; alpha > 0.
  double gamma(double alpha);

  // Chi-square with nu > 0 degrees of freedom (nu need not be integral).
  double chi_square(double nu);

  // Index in [0, n) proportional to weights[i]; weights must sum to ~1.
  int categorical(const Eigen::VectorXd& weights);

  // Uniform direction on the unit sphere in R^d.
  Eigen::VectorXd unit_vector(int dim);

  Eigen::VectorXd normal_vector(int dim);

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable mix of (seed, stream) into a fresh seed for samplers that take a
// bare seed argument.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Fixed stream ids so independent pipeline phases never share a sequence.
namespace streams {
inline constexpr std::uint64_t kTrainData = 1;
inline constexpr std::uint64_t kReference = 2;
inline constexpr std::uint64_t kReferenceB = 3;
inline constexpr std::uint64_t kModelInit = 4;
inline constexpr std::uint64_t kTrainBatch = 5;
inline constexpr std::uint64_t kSamplePrior = 6;
inline constexpr std::uint64_t kDomainGen = 7;
inline constexpr std::uint64_t kTargetGen = 8;
inline constexpr std::uint64_t kEval = 9;
inline constexpr std::uint64_t kPairProvider = 10;
}  // namespace streams

}  // namespace mf
