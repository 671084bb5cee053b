// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Core>

#include "mirrorflow/rng.hpp"

namespace mf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Convex set K = { x : phi_i(x) < 0, i = 1..m } described by smooth convex
// barriers. Two families are supported:
//   Polytope: phi_i(x) = a_i^T x - b_i          (rows a_i of A)
//   Ball:     phi(x)   = ||x||^2 - R^2          (single barrier)
// Construction verifies a nonempty interior and caches a strictly feasible
// point found by subgradient descent on x -> max_i phi_i(x).
class ConvexDomain {
 public:
  enum class Kind { Polytope, Ball };

  static ConvexDomain polytope(Mat A, Vec b);
  static ConvexDomain ball(double radius, int dim);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  int num_barriers() const { return kind_ == Kind::Ball ? 1 : static_cast<int>(A_.rows()); }

  // (phi_1(x), ..., phi_m(x)); throws DimensionError on size mismatch.
  Vec barrier_values(const Vec& x) const;

  // Strict feasibility: all phi_i(x) < 0. Boundary points are outside.
  bool contains(const Vec& x) const;

  // Gradient of barrier i at x: a_i for polytope rows, 2x for the ball.
  Vec barrier_gradient(int i, const Vec& x) const;

  // Strictly feasible point located at construction.
  const Vec& interior_point() const { return interior_point_; }

  // sup { s >= 0 : x + s*dir stays feasible }; +inf when the ray never exits.
  double max_feasible_step(const Vec& x, const Vec& dir) const;

  // x0 + U(0, max_fraction) * (distance to boundary) along a random direction;
  // always strictly feasible. Unbounded rays are capped at a finite length.
  Vec random_interior_point(Rng& rng, double max_fraction = 0.9) const;

  const Mat& A() const { return A_; }
  const Vec& b() const { return b_; }
  double radius() const { return radius_; }

 private:
  ConvexDomain() = default;

  Kind kind_ = Kind::Ball;
  int dim_ = 0;
  Mat A_;          // polytope only
  Vec b_;          // polytope only
  double radius_ = 0.0;  // ball only
  Vec interior_point_;
};

// Subgradient search for a strictly interior point (Polyak steps on
// max_i phi_i from the origin, at most `max_iters` iterations). Throws
// Error("empty interior ...") when no strictly feasible point is found.
Vec find_interior_point(const ConvexDomain& domain, int max_iters = 10000);

// Mirror potential over a convex domain.
//   Regularized: Psi(x) = -1/(1-kappa) * sum_i (-phi_i(x))^{1-kappa} + 0.5||x||^2
//   LogBarrier:  Psi(x) = -sum_i log(-phi_i(x))
// The regularized variant is 1-strongly convex (hessian >= I), which makes the
// conjugate gradient nonexpansive and gives the dual distribution a tail
// exponent of beta/kappa under a beta boundary-mass condition.
class MirrorMap {
 public:
  enum class Variant { Regularized, LogBarrier };

  static MirrorMap regularized(ConvexDomain domain, double kappa);
  static MirrorMap log_barrier(ConvexDomain domain);

  double psi(const Vec& x) const;

  // z = grad Psi(x). Throws FeasibilityError naming the violated barrier
  // index when x is not strictly feasible.
  Vec gradient(const Vec& x) const;

  // Symmetric d x d; for the regularized variant, positive definite with
  // smallest eigenvalue >= 1.
  Mat hessian(const Vec& x) const;

  // x* = argmin_x Psi(x) - z^T x, the unique feasible point with
  // grad Psi(x*) = z. Damped Newton with fraction-to-boundary steps; the
  // returned point satisfies ||grad Psi(x*) - z|| <= 1e-8 * (1 + ||z||),
  // otherwise a NumericError carrying the final residual is thrown.
  Vec inverse_gradient(const Vec& z) const;

  const ConvexDomain& domain() const { return domain_; }
  Variant variant() const { return variant_; }
  double kappa() const { return kappa_; }
  const Vec& interior_point() const { return domain_.interior_point(); }

  static constexpr int kNewtonMaxIters = 500;

 private:
  MirrorMap(ConvexDomain domain, Variant variant, double kappa);

  ConvexDomain domain_;
  Variant variant_;
  double kappa_;  // meaningful for Regularized only
};

// Result of the dual tail-index fit of Prop.-style bounds
// P(||grad Psi(X)|| >= R) <= C / R^{beta/kappa}.
struct TailReport {
  double exponent_estimate = 0.0;  // minus the log-log CCDF slope
  double beta = std::numeric_limits<double>::quiet_NaN();  // analytic, if known
  double kappa = 0.0;
  double r_squared = 0.0;
  std::int64_t n_samples = 0;
};

using PrimalSampler = std::function<Mat(std::int64_t n)>;

// Pushes n primal samples through grad Psi and fits a line to the log CCDF of
// the dual norms over the top decile. Throws StatsError when the tail is
// degenerate (fewer than 100 points or no spread). `beta_hint` is recorded
// into the report when the boundary-mass exponent is known analytically.
TailReport dual_tail_exponent(const MirrorMap& map, const PrimalSampler& sampler,
                              std::int64_t n,
                              double beta_hint = std::numeric_limits<double>::quiet_NaN());

}  // namespace mf
