// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mirrorflow/velocity.hpp"

namespace mf {

// SiLU MLP velocity field v(z, t) with a sinusoidal time embedding
// [t, sin(2*pi*t*2^j), cos(2*pi*t*2^j)]_{j<k} appended to z. Parameters live
// in one flat vector (per layer: column-major weights, then biases), which
// keeps the optimizer and checkpoint code trivial. Hidden weights use
// 1/sqrt(fan_in) init; the output layer starts at zero so the initial field
// is identically zero.
class MlpVelocity final : public VelocityField {
 public:
  MlpVelocity(int data_dim, std::vector<int> hidden_widths, int time_frequencies,
              std::uint64_t init_seed);

  int dim() const override { return data_dim_; }
  int time_features() const { return 1 + 2 * time_frequencies_; }
  int time_frequencies() const { return time_frequencies_; }

  // Full layer sizes, input (= dim + time_features) through output (= dim).
  const std::vector<int>& layer_dims() const { return layer_dims_; }

  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }
  const Vec& params() const { return params_; }
  Vec& params() { return params_; }

  // v(z, t) for 0 <= t <= 1; throws NumericError on non-finite input.
  Vec forward(const Vec& z, double t) const;
  Mat forward_batch(const Mat& Z, const Vec& t) const;
  void eval(const Mat& Z, double t, Mat& out) const override;

  // Mean over the batch of ||v(z_i, t_i) - y_i||^2 and its gradient with
  // respect to the flat parameter vector (reverse mode).
  double loss_and_grad(const Mat& Zt, const Vec& t, const Mat& target,
                       Vec& grad) const;
  double loss(const Mat& Zt, const Vec& t, const Mat& target) const;

  // Checkpoint: text header plus one full-precision decimal per line.
  void save_params(const std::string& path) const;
  // Requires the file's architecture to match this model exactly.
  void load_params(const std::string& path);
  static MlpVelocity load(const std::string& path);

 private:
  Mat embed(const Mat& Z, const Vec& t) const;

  int data_dim_;
  int time_frequencies_;
  std::vector<int> layer_dims_;
  Vec params_;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 256;
  int steps = 4000;
  double grad_clip_norm = 10.0;
  std::uint64_t seed = 0;
  std::pair<double, double> adam_betas{0.9, 0.999};
  double adam_eps = 1e-8;

  void validate() const;
};

struct TrainReport {
  double final_loss = 0.0;
  std::vector<std::pair<int, double>> loss_curve;  // sampled (step, loss)
  // Empirical stand-ins for the velocity approximation error, filled by the
  // caller when a closed-form oracle exists.
  std::optional<double> velocity_mse_grid;
  std::optional<double> velocity_mse_marginal;
};

// Fills (Z0, Z1) with n fresh coupled rows per call.
using PairProvider = std::function<void(std::int64_t n, Mat& z0, Mat& z1)>;

// Adam loop over fresh batches with t ~ U[0,1], straight-line interpolation
// z_t = (1-t)z0 + t*z1, regression target z1 - z0, and global-norm gradient
// clipping. Deterministic given cfg.seed. NaN loss aborts with the step index.
TrainReport train(MlpVelocity& model, const TrainConfig& cfg,
                  const PairProvider& pairs);

}  // namespace mf
