// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mirrorflow/flow.hpp"
#include "mirrorflow/metrics.hpp"
#include "mirrorflow/prior.hpp"

namespace mf {

// m unit-norm rows drawn uniformly on the sphere with offsets b_i in [3, 8],
// so the origin is interior with margin >= 3. Boundedness is certified by
// 1e6 random rays from the origin (every ray must exit); unbounded draws are
// regenerated, up to 100 attempts. Deterministic given (d, m, seed).
ConvexDomain generate_random_polytope(int d, int m, std::uint64_t seed);

struct DomainSpec {
  enum class Kind { Polytope, Ball, Generated };
  Kind kind = Kind::Ball;
  Mat A;               // Polytope
  Vec b;               // Polytope
  double radius = 1.0;  // Ball
  int dim = 1;
  int rows = 0;                // Generated
  std::uint64_t seed = 0;      // Generated

  ConvexDomain build() const;
  nlohmann::json to_json() const;
};

struct TargetSpec {
  enum class Kind { Mixture, Generated };
  Kind kind = Kind::Mixture;
  std::vector<TruncatedMixtureTarget::Component> components;  // Mixture
  // Generated: fixed alternating +-3 patterns plus seeded random means found
  // by rejection inside the domain (margin >= 1), isotropic covariance.
  int n_random = 4;
  int n_patterns = 4;
  double variance = 0.4;
  std::uint64_t seed = 0;

  TruncatedMixtureTarget build(const ConvexDomain& domain) const;
  nlohmann::json to_json() const;
};

struct EvalConfig {
  std::int64_t n_reference = 5000;
  int kl_k = 5;
  bool mode_occupancy = false;
};

struct ExperimentConfig {
  std::string preset;  // empty when fully explicit
  DomainSpec domain;
  TargetSpec target;
  MirrorMap::Variant map_variant = MirrorMap::Variant::Regularized;
  double kappa = 0.3;
  PriorKind prior_kind = PriorKind::StudentT;
  double nu = 10.0;
  TrainConfig train;
  std::int64_t n_train = 20000;
  MlpArchitecture arch;
  double h = 0.1;
  double T = 0.9;
  std::int64_t n_sample = 5000;
  EvalConfig eval;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "runs/experiment";

  // Fully expanded echo, written into every report.
  nlohmann::json echo() const;
};

// Named presets: "polytope2d" (the five-row 2D polytope with a three-mode
// truncated mixture, kappa 0.5), "polytope10d" (seeded 30-row generated
// domain, kappa 0.3) and "ball6d" (radius-12 ball, kappa 0.3); all use a
// Student-t prior with nu = 10 and the h = 0.1, T = 0.9 schedule.
ExperimentConfig preset_config(const std::string& name);

// Parses and validates a config file: preset expansion first, explicit fields
// override, unknown keys and invalid values are ConfigErrors.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_json(const nlohmann::json& j);

struct SeedResult {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  MetricReport metrics;
  std::optional<Vec> occupancy;           // nearest-mean fractions
  std::optional<Vec> occupancy_expected;  // acceptance-renormalized weights
  TrainReport train_report;
  double seconds_train = 0.0;
  double seconds_sample = 0.0;
  double seconds_eval = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // n-1 denominator; 0 for a single value
  int count = 0;
};

struct ExperimentReport {
  nlohmann::json config_echo;
  std::vector<SeedResult> seeds;
  Aggregate mmd_squared;
  Aggregate kl;
  Aggregate feasibility;
  std::optional<Aggregate> w2;

  // Deterministic portion (config echo, per-seed metrics, aggregates).
  nlohmann::json aggregate_json() const;
  // Human-readable table including wall-clock times.
  std::string markdown() const;
};

Aggregate aggregate_values(const std::vector<double>& values);

// Full pipeline per seed: draw ground truth, train the dual field, sample,
// evaluate against a fresh reference. A failing seed is recorded and the
// remaining seeds still run. With `write_outputs`, emits
// samples_seed<k>.csv(.meta.json), metrics_seed<k>.json, aggregate.json and
// report.md under cfg.output_dir.
ExperimentReport run_experiment(const ExperimentConfig& cfg, bool verbose = false,
                                bool write_outputs = true);

// Phases of run_experiment, exposed for the train/sample/eval subcommands.
// Artifacts live under out_dir: model_seed<k>.ckpt and the files above.
void run_train_phase(const ExperimentConfig& cfg, const std::string& out_dir,
                     bool verbose);
void run_sample_phase(const ExperimentConfig& cfg, const std::string& out_dir,
                      bool verbose);
void run_eval_phase(const ExperimentConfig& cfg, const std::string& out_dir,
                    bool verbose);

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;  // residuals / fitted values
};

// Invariant suites of all modules (geometry round trips and derivatives,
// dual tails, oracle exactness and primal-dual equivalence, model gradients,
// metric sanity). Nonzero failure count means a broken build.
std::vector<VerifyCheck> run_verify(bool verbose = false);

}  // namespace mf
