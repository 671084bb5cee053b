// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "mirrorflow/geometry.hpp"
#include "mirrorflow/model.hpp"
#include "mirrorflow/prior.hpp"
#include "mirrorflow/velocity.hpp"

namespace mf {

enum class Space { Primal, Dual };

struct SampleBatch {
  Mat data;  // one sample per row
  Space space = Space::Dual;
  std::uint64_t seed = 0;
  std::string generator;

  std::int64_t n() const { return data.rows(); }
  int dim() const { return static_cast<int>(data.cols()); }
};

// Euler sampling schedule. Both 1/h and T/h must be integers (up to floating
// point round-off) and 0 < T < 1; T is the early-stopping time that keeps the
// integration away from the t -> 1 singularity of the velocity field.
struct SamplerConfig {
  double h = 0.1;
  double T = 0.9;
  std::int64_t n = 5000;
  std::uint64_t seed = 0;

  void validate() const;
  int num_steps() const;  // T/h
};

// z_t = (1-t) z0 + t z1 and the regression target z1 - z0.
std::pair<Vec, Vec> make_training_pair(const Vec& z0, const Vec& z1, double t);

// n independent trajectories z <- z + h v(z, kh) from prior draws, stopped at
// time T. Throws NumericError (with trajectory and step index) if a state
// turns non-finite.
SampleBatch euler_sample(const VelocityField& v, const SamplerConfig& cfg,
                         const Prior& prior);

// Single trajectory z <- z + h v(z, kh) from an explicit start, stopped at T.
Vec euler_trajectory(const VelocityField& v, Vec z0, double h, double T);

// Network shape used by the mirror pipeline.
struct MlpArchitecture {
  std::vector<int> hidden{128, 128, 128, 128};
  int time_frequencies = 4;
};

// Maps feasible primal data through grad Psi once, then trains the dual field
// on fresh (prior draw, cached dual row) couples with independent pairing per
// batch. Deterministic given cfg.seed.
MlpVelocity mirror_train(const MirrorMap& map, const SampleBatch& primal_data,
                         const Prior& prior, const TrainConfig& cfg,
                         const MlpArchitecture& arch = MlpArchitecture{},
                         TrainReport* report = nullptr);

// euler_sample followed by the row-wise inverse mirror map; every returned
// row is strictly feasible by construction.
SampleBatch mirror_sample(const MirrorMap& map, const VelocityField& v,
                          const SamplerConfig& cfg, const Prior& prior);

// (grad^2 Psi(x))^{-1} v_dual(grad Psi(x), t): the primal-space drift
// corresponding to a dual field.
Vec primal_velocity(const MirrorMap& map, const VelocityField& v_dual,
                    const Vec& x, double t);

// CSV persistence: header dim_0,...,dim_{d-1}, one full-precision row per
// sample; a `<path>.meta.json` sidecar records space, seed and generator.
void write_batch_csv(const SampleBatch& batch, const std::string& path);
SampleBatch read_batch_csv(const std::string& path);

}  // namespace mf
