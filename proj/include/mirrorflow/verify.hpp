// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "mirrorflow/geometry.hpp"
#include "mirrorflow/oracle.hpp"

// Reusable numeric checks shared by `run_verify` and the acceptance suite.
// The finite-difference routines only consume Psi / grad Psi values, so they
// stay independent of the analytic derivative code they are used to test.

namespace mf::checks {

Vec fd_gradient_of_psi(const MirrorMap& map, const Vec& x);
Mat fd_hessian_via_gradient(const MirrorMap& map, const Vec& x, double eps = 1e-6);

struct GeometryStats {
  double max_roundtrip = 0.0;     // ||inv(grad x) - x|| / (1 + ||grad x||)
  double min_eigenvalue = 0.0;    // of the Hessian, over all points
  double max_grad_fd_rel = 0.0;   // analytic vs centered differences of Psi
  double max_hess_fd_rel = 0.0;   // analytic vs centered differences of grad
  double max_expansion = 0.0;     // ||inv(z1)-inv(z2)|| / ||z1-z2||
};

// Evaluated over n random interior points (and n/2 dual pairs).
GeometryStats geometry_suite(const MirrorMap& map, int n_points, std::uint64_t seed,
                             bool with_fd = true);

// Example fixture: an ill-shaped triangle on which the log-barrier gradient
// contracts pairs by ~2e-4 while the regularized map never contracts.
struct TriangleRatios {
  double log_barrier_min = 0.0;
  double regularized_min = 0.0;
};
TriangleRatios ill_shaped_triangle_ratios();

// max |euler(z0) - (atom + (1-T)(z0 - atom))| over a few starts.
double single_atom_euler_error(double atom, double h, double T);

// max relative backprop error against centered differences, over every
// parameter of a small random net.
double model_gradient_max_rel_err(std::uint64_t seed);

}  // namespace mf::checks
