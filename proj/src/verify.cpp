// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#include "mirrorflow/verify.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mirrorflow/bench.hpp"
#include "mirrorflow/errors.hpp"
#include "mirrorflow/flow.hpp"
#include "mirrorflow/metrics.hpp"
#include "mirrorflow/model.hpp"

namespace mf::checks {

Vec fd_gradient_of_psi(const MirrorMap& map, const Vec& x) {
  const int d = static_cast<int>(x.size());
  Vec g(d);
  for (int j = 0; j < d; ++j) {
    const double eps = 1e-6 * std::max(1.0, std::abs(x[j]));
    Vec xp = x, xm = x;
    xp[j] += eps;
    xm[j] -= eps;
    g[j] = (map.psi(xp) - map.psi(xm)) / (2.0 * eps);
  }
  return g;
}

Mat fd_hessian_via_gradient(const MirrorMap& map, const Vec& x, double eps) {
  const int d = static_cast<int>(x.size());
  Mat H(d, d);
  for (int j = 0; j < d; ++j) {
    Vec xp = x, xm = x;
    xp[j] += eps;
    xm[j] -= eps;
    H.col(j) = (map.gradient(xp) - map.gradient(xm)) / (2.0 * eps);
  }
  return H;
}

GeometryStats geometry_suite(const MirrorMap& map, int n_points, std::uint64_t seed,
                             bool with_fd) {
  GeometryStats stats;
  stats.min_eigenvalue = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  const auto& domain = map.domain();

  for (int i = 0; i < n_points; ++i) {
    const Vec x = domain.random_interior_point(rng);
    const Vec z = map.gradient(x);
    const Vec x2 = map.inverse_gradient(z);
    stats.max_roundtrip =
        std::max(stats.max_roundtrip, (x2 - x).norm() / (1.0 + z.norm()));

    const Mat H = map.hessian(x);
    Eigen::SelfAdjointEigenSolver<Mat> eig(H);
    stats.min_eigenvalue = std::min(stats.min_eigenvalue, eig.eigenvalues()[0]);

    if (with_fd) {
      const Vec g_fd = fd_gradient_of_psi(map, x);
      stats.max_grad_fd_rel =
          std::max(stats.max_grad_fd_rel, (g_fd - z).norm() / (1.0 + z.norm()));
      const Mat h_fd = fd_hessian_via_gradient(map, x);
      stats.max_hess_fd_rel =
          std::max(stats.max_hess_fd_rel, (h_fd - H).norm() / H.norm());
    }
  }

  for (int i = 0; i < n_points / 2; ++i) {
    const Vec z1 = map.gradient(domain.random_interior_point(rng)) +
                   0.5 * rng.normal_vector(domain.dim());
    const Vec z2 = map.gradient(domain.random_interior_point(rng)) +
                   0.5 * rng.normal_vector(domain.dim());
    const double dz = (z1 - z2).norm();
    if (dz < 1e-12) continue;
    const double dx = (map.inverse_gradient(z1) - map.inverse_gradient(z2)).norm();
    stats.max_expansion = std::max(stats.max_expansion, dx / dz);
  }
  return stats;
}

TriangleRatios ill_shaped_triangle_ratios() {
  Mat A(3, 2);
  A << 100.0, 0.01, 100.0, -0.01, -1.0, 0.0;
  Vec b(3);
  b << 1.0, 1.0, 0.0;
  const ConvexDomain triangle = ConvexDomain::polytope(A, b);
  const MirrorMap logb = MirrorMap::log_barrier(triangle);
  const MirrorMap reg = MirrorMap::regularized(triangle, 0.5);

  TriangleRatios ratios;
  ratios.log_barrier_min = std::numeric_limits<double>::infinity();
  ratios.regularized_min = std::numeric_limits<double>::infinity();
  for (const double k : {1e-3, 1e-4, 1e-5, 1e-6}) {
    Vec xp(2), xm(2);
    xp << k, k;
    xm << k, -k;
    const double dx = (xp - xm).norm();
    ratios.log_barrier_min = std::min(
        ratios.log_barrier_min, (logb.gradient(xp) - logb.gradient(xm)).norm() / dx);
    ratios.regularized_min = std::min(
        ratios.regularized_min, (reg.gradient(xp) - reg.gradient(xm)).norm() / dx);
  }
  return ratios;
}

double single_atom_euler_error(double atom, double h, double T) {
  Mat atoms(1, 1);
  atoms(0, 0) = atom;
  Vec w(1);
  w << 1.0;
  const OracleVelocity oracle(Prior::student_t(1, 10.0), FiniteAtomTarget(atoms, w));
  double worst = 0.0;
  for (const double z0 : {-3.0, -0.5, 0.0, 1.7, 8.0}) {
    Vec start(1);
    start << z0;
    const Vec end = euler_trajectory(oracle, start, h, T);
    const double expected = atom + (1.0 - T) * (z0 - atom);
    worst = std::max(worst, std::abs(end[0] - expected));
  }
  return worst;
}

double model_gradient_max_rel_err(std::uint64_t seed) {
  MlpVelocity model(2, {8, 8, 8}, 2, seed);
  Rng rng(seed, streams::kEval);
  for (Eigen::Index i = 0; i < model.params().size(); ++i)
    model.params()[i] = 0.5 * rng.normal();

  const int n = 6;
  Mat zt(n, 2), target(n, 2);
  Vec t(n);
  for (int i = 0; i < n; ++i) {
    zt(i, 0) = rng.normal();
    zt(i, 1) = rng.normal();
    target(i, 0) = rng.normal();
    target(i, 1) = rng.normal();
    t[i] = rng.uniform();
  }

  Vec grad;
  model.loss_and_grad(zt, t, target, grad);

  double worst = 0.0;
  for (Eigen::Index i = 0; i < model.params().size(); ++i) {
    const double orig = model.params()[i];
    const double eps = 1e-5 * std::max(1.0, std::abs(orig));
    model.params()[i] = orig + eps;
    const double lp = model.loss(zt, t, target);
    model.params()[i] = orig - eps;
    const double lm = model.loss(zt, t, target);
    model.params()[i] = orig;
    const double fd = (lp - lm) / (2.0 * eps);
    const double rel =
        std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace mf::checks

namespace mf {

namespace {

struct CheckRunner {
  std::vector<VerifyCheck> results;

  void add(const std::string& name, bool pass, const std::string& detail) {
    results.push_back({name, pass, detail});
  }

  template <typename F>
  void run(const std::string& name, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      add(name, false, std::string("exception: ") + e.what());
    }
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<VerifyCheck> run_verify(bool verbose) {
  (void)verbose;  // detail strings always carry the residuals
  CheckRunner r;

  r.run("geometry: polytope2d suite", [&] {
    const auto cfg = preset_config("polytope2d");
    const MirrorMap map = MirrorMap::regularized(cfg.domain.build(), cfg.kappa);
    const auto s = checks::geometry_suite(map, 200, 11);
    r.add("geometry 2d: conjugate round trip", s.max_roundtrip <= 1e-8,
          "max residual " + fmt(s.max_roundtrip));
    r.add("geometry 2d: hessian >= I", s.min_eigenvalue >= 1.0 - 1e-8,
          "min eigenvalue " + fmt(s.min_eigenvalue));
    r.add("geometry 2d: gradient finite differences", s.max_grad_fd_rel <= 1e-6,
          "max rel err " + fmt(s.max_grad_fd_rel));
    r.add("geometry 2d: hessian finite differences", s.max_hess_fd_rel <= 1e-5,
          "max rel err " + fmt(s.max_hess_fd_rel));
    r.add("geometry 2d: inverse nonexpansive", s.max_expansion <= 1.0 + 1e-8,
          "max expansion " + fmt(s.max_expansion));
  });

  r.run("geometry: ball6d suite", [&] {
    const MirrorMap map = MirrorMap::regularized(ConvexDomain::ball(12.0, 6), 0.3);
    const auto s = checks::geometry_suite(map, 200, 12);
    r.add("geometry ball: conjugate round trip", s.max_roundtrip <= 1e-8,
          "max residual " + fmt(s.max_roundtrip));
    r.add("geometry ball: hessian >= I", s.min_eigenvalue >= 1.0 - 1e-8,
          "min eigenvalue " + fmt(s.min_eigenvalue));
    r.add("geometry ball: gradient finite differences", s.max_grad_fd_rel <= 1e-6,
          "max rel err " + fmt(s.max_grad_fd_rel));
  });

  r.run("geometry: ill-shaped triangle", [&] {
    const auto ratios = checks::ill_shaped_triangle_ratios();
    r.add("triangle: log barrier contracts", ratios.log_barrier_min <= 3e-4,
          "min ratio " + fmt(ratios.log_barrier_min));
    r.add("triangle: regularized map does not", ratios.regularized_min >= 1.0 - 1e-9,
          "min ratio " + fmt(ratios.regularized_min));
  });

  r.run("geometry: dual tail exponents", [&] {
    Mat A(4, 2);
    A << 1, 0, -1, 0, 0, 1, 0, -1;
    const ConvexDomain cube = ConvexDomain::polytope(A, Vec::Ones(4));
    Rng rng(2024);
    PrimalSampler uniform_cube = [&rng](std::int64_t n) {
      Mat s(n, 2);
      for (std::int64_t i = 0; i < n; ++i) {
        s(i, 0) = rng.uniform(-1.0, 1.0);
        s(i, 1) = rng.uniform(-1.0, 1.0);
      }
      return s;
    };
    const auto reg =
        dual_tail_exponent(MirrorMap::regularized(cube, 0.5), uniform_cube, 1000000, 1.0);
    r.add("tail: kappa=0.5 exponent ~ beta/kappa = 2",
          std::abs(reg.exponent_estimate - 2.0) <= 0.5,
          "estimate " + fmt(reg.exponent_estimate) + ", r2 " + fmt(reg.r_squared));
    const auto logb =
        dual_tail_exponent(MirrorMap::log_barrier(cube), uniform_cube, 1000000, 1.0);
    r.add("tail: log barrier exponent ~ 1",
          std::abs(logb.exponent_estimate - 1.0) <= 0.4,
          "estimate " + fmt(logb.exponent_estimate) + ", r2 " + fmt(logb.r_squared));
  });

  r.run("oracle: single-atom euler exactness", [&] {
    double worst = 0.0;
    worst = std::max(worst, checks::single_atom_euler_error(1.0, 0.1, 0.9));
    worst = std::max(worst, checks::single_atom_euler_error(-2.5, 0.05, 0.8));
    worst = std::max(worst, checks::single_atom_euler_error(0.3, 0.25, 0.75));
    r.add("oracle: single-atom euler exactness", worst <= 1e-12,
          "max error " + fmt(worst));
  });

  r.run("oracle: two-atom posterior value", [&] {
    // Brute force: densities (1+u^2)^{-1} at u = (z - t a)/(1-t).
    const double z = 0.5, t = 0.5;
    const double u0 = (z - t * 0.0) / (1.0 - t);
    const double u1 = (z - t * 1.0) / (1.0 - t);
    const double d0 = 0.5 / (1.0 + u0 * u0);
    const double d1 = 0.5 / (1.0 + u1 * u1);
    const double expected = (-z + (d0 * 0.0 + d1 * 1.0) / (d0 + d1)) / (1.0 - t);

    Mat atoms(2, 1);
    atoms << 0.0, 1.0;
    Vec w(2);
    w << 0.5, 0.5;
    const OracleVelocity oracle(Prior::student_t(1, 1.0), FiniteAtomTarget(atoms, w));
    Vec zq(1);
    zq << z;
    const double got = oracle.velocity(zq, t)[0];
    r.add("oracle: two-atom velocity = 1/3",
          std::abs(got - expected) <= 1e-9 && std::abs(got - 1.0 / 3.0) <= 1e-9,
          "value " + fmt(got));
  });

  r.run("oracle: primal-dual equivalence", [&] {
    const auto cfg = preset_config("polytope2d");
    const MirrorMap map = MirrorMap::regularized(cfg.domain.build(), 0.5);
    Mat atoms(2, 2);
    atoms << -2.0, 0.5, 1.0, -1.5;
    Vec w(2);
    w << 0.5, 0.5;
    const OracleVelocity oracle(Prior::student_t(2, 5.0),
                                FiniteAtomTarget(atoms, w));
    Vec z0(2);
    z0 << 0.4, -0.3;
    const double res = check_primal_dual_equivalence(map, oracle, z0, 0.5, 0.05);
    r.add("oracle: primal-dual equivalence", res <= 1e-4,
          "max relative residual " + fmt(res));
  });

  r.run("model: gradient check", [&] {
    const double err = checks::model_gradient_max_rel_err(7);
    r.add("model: backprop vs finite differences", err <= 1e-4,
          "max rel err " + fmt(err));
  });

  r.run("metrics: sanity", [&] {
    Mat X(2, 1), Y(2, 1);
    X << 0.0, 1.0;
    Y << 2.0, 3.0;
    const double w2 = w2_exact(X, Y);
    r.add("metrics: w2 monotone matching", std::abs(w2 - 2.0) <= 1e-12,
          "value " + fmt(w2));

    Mat a(1, 1), bb(1, 1);
    a << 0.0;
    bb << 1.0;
    const double mmd = mmd_squared(a, bb, 1.0);
    const double expected = 2.0 - 2.0 * std::exp(-0.5);
    r.add("metrics: mmd two-point value", std::abs(mmd - expected) <= 1e-12,
          "value " + fmt(mmd));

    Rng rng(5);
    Mat G(2000, 2);
    for (Eigen::Index i = 0; i < G.rows(); ++i) {
      G(i, 0) = rng.normal();
      G(i, 1) = rng.normal();
    }
    const double self = mmd_squared(G, G);
    r.add("metrics: mmd identical batches", std::abs(self) <= 1e-12,
          "value " + fmt(self));
  });

  r.run("metrics: kl estimator", [&] {
    Rng rng(6);
    const int n = 10000;
    Mat P(n, 2), Q(n, 2);
    for (int i = 0; i < n; ++i) {
      P(i, 0) = rng.normal();
      P(i, 1) = rng.normal();
      Q(i, 0) = rng.normal();
      Q(i, 1) = rng.normal();
    }
    const double kl_same = kl_knn(P, Q, 5);
    r.add("metrics: kl of matched gaussians ~ 0", std::abs(kl_same) <= 0.05,
          "value " + fmt(kl_same));
  });

  r.run("aggregate: std formula", [&] {
    const std::vector<double> v{1.0, 2.0, 4.0, 8.0};
    const auto a = aggregate_values(v);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double ref = std::sqrt(ss / static_cast<double>(v.size() - 1));
    r.add("aggregate: std two-pass", std::abs(a.std - ref) <= 1e-12,
          "std " + fmt(a.std));
  });

  return r.results;
}

}  // namespace mf
