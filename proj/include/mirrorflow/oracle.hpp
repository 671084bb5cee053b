// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "mirrorflow/prior.hpp"
#include "mirrorflow/velocity.hpp"

namespace mf {

// Exact conditional velocity field for a finite-atom target under straight
// line interpolation Z_t = (1-t)Z_0 + t Z_1:
//
//   v(z,t) = (E[Z_1 | Z_t = z] - z) / (1-t),
//   P(Z_1 = a_i | Z_t = z) proportional to w_i * p0((z - t a_i)/(1-t)),
//
// where the common (1-t)^{-d} Jacobian cancels. Posterior weights are formed
// in the log domain with max subtraction. The optional `prior_center` shifts
// the prior, which makes the field translation-equivariant together with the
// atoms.
class OracleVelocity final : public VelocityField {
 public:
  OracleVelocity(Prior prior, FiniteAtomTarget target);
  OracleVelocity(Prior prior, FiniteAtomTarget target, Vec prior_center);

  // Throws for t >= 1. Slightly negative t (>= -1e-4) is tolerated so that
  // centered time differences work at t = 0.
  Vec velocity(const Vec& z, double t) const;

  // Posterior over atoms at (z, t); a probability vector.
  Vec posterior(const Vec& z, double t) const;

  int dim() const override { return target_.dim(); }
  void eval(const Mat& Z, double t, Mat& out) const override;

  const Prior& prior() const { return prior_; }
  const FiniteAtomTarget& target() const { return target_; }

 private:
  Prior prior_;
  FiniteAtomTarget target_;
  Vec prior_center_;
};

struct ProbeGrid {
  Mat points;                 // one probe location per row
  std::vector<double> times;  // all < 1
  std::string description;
};

// Lattice over the atom bounding box inflated by 50%, with times
// {0, T/10, ..., T}. Full lattice for d <= 3, a seeded uniform fill of the
// box otherwise. A degenerate box (single atom) is padded to unit half-width.
ProbeGrid default_probe_grid(const FiniteAtomTarget& target, double T,
                             int points_per_axis = 11, int time_points = 11,
                             double inflate = 0.5);

struct LipschitzEstimate {
  double spatial = 0.0;   // max finite-difference Jacobian spectral norm
  double temporal = 0.0;  // max finite-difference ||dv/dt||
  double T = 0.0;
  std::string grid_spec;
};

// Central finite differences (eps = 1e-5) of the oracle velocity over
// {probe points} x {times}; returns the maxima. Probe times >= 1 are a
// precondition error.
LipschitzEstimate estimate_lipschitz(const OracleVelocity& oracle, double T,
                                     const ProbeGrid& probe);

// Integrates the dual ODE from z0 with the oracle velocity and, at every
// step, compares the chain rule grad^2 Psi*(z) v(z,t) against a centered
// difference of grad Psi* along the trajectory (eps = 1e-6). Returns the
// maximum relative residual.
double check_primal_dual_equivalence(const MirrorMap& map,
                                     const OracleVelocity& oracle, const Vec& z0,
                                     double T, double h);

// Fixed two-atom far-mode configuration on which a Gaussian-prior oracle has
// a much larger spatial Lipschitz estimate than a Student-t prior: the
// Gaussian posterior switches modes over an O((1-t)^2/t) window while the
// polynomial tails switch smoothly.
struct FarAtomComparison {
  FiniteAtomTarget target;
  double T;
  ProbeGrid grid;
};
FarAtomComparison far_atom_comparison_config();

// Mean ||vhat - v||^2 over the probe grid; the empirical epsilon^2 of the
// velocity-approximation assumption on finite-atom targets.
double velocity_mse_on_grid(const VelocityField& vhat, const OracleVelocity& oracle,
                            const ProbeGrid& grid);

// Same error measured on the interpolation marginal: couples (z0, z1) from
// the oracle's prior and target, t uniform on [0, T].
double velocity_mse_on_marginal(const VelocityField& vhat,
                                const OracleVelocity& oracle, std::int64_t n,
                                double T, std::uint64_t seed);

}  // namespace mf
