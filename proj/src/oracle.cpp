// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#include "mirrorflow/oracle.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "mirrorflow/errors.hpp"

namespace mf {

Vec VelocityField::eval_point(const Vec& z, double t) const {
  Mat Z(1, z.size());
  Z.row(0) = z.transpose();
  Mat out;
  eval(Z, t, out);
  return out.row(0).transpose();
}

OracleVelocity::OracleVelocity(Prior prior, FiniteAtomTarget target)
    : OracleVelocity(std::move(prior), std::move(target),
                     Vec::Zero(target.dim())) {}

OracleVelocity::OracleVelocity(Prior prior, FiniteAtomTarget target,
                               Vec prior_center)
    : prior_(prior), target_(std::move(target)),
      prior_center_(std::move(prior_center)) {
  if (prior_.dim != target_.dim())
    throw DimensionError("oracle: prior and target dimensions differ");
  if (prior_center_.size() != target_.dim())
    throw DimensionError("oracle: prior center has wrong dimension");
}

Vec OracleVelocity::posterior(const Vec& z, double t) const {
  if (t >= 1.0) throw PreconditionError("oracle velocity: t must be < 1");
  if (t < -1e-4) throw PreconditionError("oracle velocity: t must be >= 0");
  const int k = target_.num_atoms();
  Vec logw(k);
  const double s = 1.0 / (1.0 - t);
  for (int i = 0; i < k; ++i) {
    const double w = target_.weights[i];
    if (w == 0.0) {
      logw[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const Vec u = (z - t * target_.atoms.row(i).transpose()) * s - prior_center_;
    logw[i] = std::log(w) + prior_.log_density_unnormalized(u);
  }
  const double lmax = logw.maxCoeff();
  if (!std::isfinite(lmax))
    throw NumericError("oracle velocity: all posterior log-weights are -inf");
  Vec w(k);
  for (int i = 0; i < k; ++i)
    w[i] = std::isfinite(logw[i]) ? std::exp(logw[i] - lmax) : 0.0;
  w /= w.sum();
  return w;
}

Vec OracleVelocity::velocity(const Vec& z, double t) const {
  const Vec w = posterior(z, t);
  const Vec cond_mean = target_.atoms.transpose() * w;
  return (cond_mean - z) / (1.0 - t);
}

void OracleVelocity::eval(const Mat& Z, double t, Mat& out) const {
  out.resize(Z.rows(), Z.cols());
  for (Eigen::Index i = 0; i < Z.rows(); ++i)
    out.row(i) = velocity(Z.row(i).transpose(), t).transpose();
}

ProbeGrid default_probe_grid(const FiniteAtomTarget& target, double T,
                             int points_per_axis, int time_points,
                             double inflate) {
  const int d = target.dim();
  Vec lo = target.atoms.colwise().minCoeff().transpose();
  Vec hi = target.atoms.colwise().maxCoeff().transpose();
  for (int j = 0; j < d; ++j) {
    double half = 0.5 * (hi[j] - lo[j]);
    const double mid = 0.5 * (hi[j] + lo[j]);
    half = (half < 1e-9) ? 1.0 : half * (1.0 + inflate);
    lo[j] = mid - half;
    hi[j] = mid + half;
  }

  ProbeGrid grid;
  std::int64_t total = 1;
  bool lattice = d <= 3;
  if (lattice) {
    for (int j = 0; j < d; ++j) total *= points_per_axis;
  } else {
    total = static_cast<std::int64_t>(points_per_axis) * points_per_axis;
  }
  grid.points.resize(total, d);
  if (lattice) {
    for (std::int64_t p = 0; p < total; ++p) {
      std::int64_t rem = p;
      for (int j = 0; j < d; ++j) {
        const int idx = static_cast<int>(rem % points_per_axis);
        rem /= points_per_axis;
        grid.points(p, j) =
            points_per_axis == 1
                ? 0.5 * (lo[j] + hi[j])
                : lo[j] + (hi[j] - lo[j]) * idx / (points_per_axis - 1);
      }
    }
  } else {
    Rng rng(0, streams::kEval);
    for (std::int64_t p = 0; p < total; ++p)
      for (int j = 0; j < d; ++j) grid.points(p, j) = rng.uniform(lo[j], hi[j]);
  }
  grid.times.resize(static_cast<std::size_t>(time_points));
  for (int i = 0; i < time_points; ++i)
    grid.times[static_cast<std::size_t>(i)] =
        time_points == 1 ? T : T * i / (time_points - 1);

  std::ostringstream os;
  os << total << " points x " << time_points << " times, box inflate "
     << inflate << ", T=" << T;
  grid.description = os.str();
  return grid;
}

LipschitzEstimate estimate_lipschitz(const OracleVelocity& oracle, double T,
                                     const ProbeGrid& probe) {
  if (!(T > 0.0 && T < 1.0))
    throw PreconditionError("estimate_lipschitz: T must lie in (0,1)");
  if (probe.points.rows() == 0 || probe.times.empty())
    throw PreconditionError("estimate_lipschitz: empty probe grid");
  for (const double t : probe.times)
    if (t >= 1.0) throw PreconditionError("estimate_lipschitz: probe time >= 1");

  const int d = oracle.dim();
  const double eps = 1e-5;
  LipschitzEstimate est;
  est.T = T;
  est.grid_spec = probe.description;

  Mat J(d, d);
  for (Eigen::Index p = 0; p < probe.points.rows(); ++p) {
    const Vec z = probe.points.row(p).transpose();
    for (const double t : probe.times) {
      for (int j = 0; j < d; ++j) {
        Vec zp = z, zm = z;
        zp[j] += eps;
        zm[j] -= eps;
        J.col(j) = (oracle.velocity(zp, t) - oracle.velocity(zm, t)) / (2.0 * eps);
      }
      const double spec = Eigen::JacobiSVD<Mat>(J).singularValues()[0];
      est.spatial = std::max(est.spatial, spec);
      const double dt =
          (oracle.velocity(z, t + eps) - oracle.velocity(z, t - eps)).norm() /
          (2.0 * eps);
      est.temporal = std::max(est.temporal, dt);
    }
  }
  return est;
}

double check_primal_dual_equivalence(const MirrorMap& map,
                                     const OracleVelocity& oracle, const Vec& z0,
                                     double T, double h) {
  if (!(h > 0.0 && h <= 0.1))
    throw PreconditionError("check_primal_dual_equivalence: need 0 < h <= 0.1");
  if (!(T > 0.0 && T < 1.0))
    throw PreconditionError("check_primal_dual_equivalence: T must lie in (0,1)");

  const double eps = 1e-6;
  const auto steps = static_cast<int>(std::llround(T / h));
  Vec z = z0;
  double max_residual = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const Vec v = oracle.velocity(z, t);
    const Vec x = map.inverse_gradient(z);
    const Mat H = map.hessian(x);
    const Vec lhs = Eigen::LLT<Mat>(H).solve(v);  // grad^2 Psi*(z) v
    const Vec xp = map.inverse_gradient(z + eps * v);
    const Vec xm = map.inverse_gradient(z - eps * v);
    const Vec rhs = (xp - xm) / (2.0 * eps);
    const double rel = (lhs - rhs).norm() / std::max(1e-10, lhs.norm());
    max_residual = std::max(max_residual, rel);
    z += h * v;
  }
  return max_residual;
}

double velocity_mse_on_grid(const VelocityField& vhat, const OracleVelocity& oracle,
                            const ProbeGrid& grid) {
  double acc = 0.0;
  std::int64_t count = 0;
  for (Eigen::Index p = 0; p < grid.points.rows(); ++p) {
    const Vec z = grid.points.row(p).transpose();
    for (const double t : grid.times) {
      acc += (vhat.eval_point(z, t) - oracle.velocity(z, t)).squaredNorm();
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

double velocity_mse_on_marginal(const VelocityField& vhat,
                                const OracleVelocity& oracle, std::int64_t n,
                                double T, std::uint64_t seed) {
  Rng rng(seed, streams::kEval);
  const Mat z0 = sample_prior(oracle.prior(), n, rng);
  const Mat z1 = sample_atoms(oracle.target(), n, derive_seed(seed, streams::kEval));
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = rng.uniform(0.0, T);
    const Vec zt = (1.0 - t) * z0.row(i).transpose() + t * z1.row(i).transpose();
    acc += (vhat.eval_point(zt, t) - oracle.velocity(zt, t)).squaredNorm();
  }
  return acc / static_cast<double>(n);
}

FarAtomComparison far_atom_comparison_config() {
  Mat atoms(2, 1);
  atoms << 0.0, 6.0;
  Vec w(2);
  w << 0.5, 0.5;
  FiniteAtomTarget target(atoms, w);

  const double T = 0.8;
  ProbeGrid grid;
  const int n = 401;
  grid.points.resize(n, 1);
  for (int i = 0; i < n; ++i)
    grid.points(i, 0) = -2.0 + 10.0 * i / (n - 1);
  grid.times.resize(11);
  for (int i = 0; i < 11; ++i) grid.times[static_cast<std::size_t>(i)] = T * i / 10.0;
  grid.description = "far-atom comparison: 401 points on [-2,8] x 11 times, T=0.8";
  return {std::move(target), T, std::move(grid)};
}

}  // namespace mf
