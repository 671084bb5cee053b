// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "mirrorflow/errors.hpp"
#include "mirrorflow/geometry.hpp"
#include "mirrorflow/verify.hpp"

using namespace mf;

namespace {

ConvexDomain appendix_polytope() {
  Mat A(5, 2);
  A << 1, 1, -1, -1, 1, -1, -5, 1, -1.0 / 3.0, 1;
  Vec b(5);
  b << 10, 30, 1, 90, 5;
  return ConvexDomain::polytope(A, b);
}

ConvexDomain halfspace() {
  Mat A(1, 2);
  A << 1, 0;
  Vec b(1);
  b << 1;
  return ConvexDomain::polytope(A, b);
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("barrier values") {
  const ConvexDomain hs = halfspace();
  CHECK(hs.barrier_values(vec2(0, 0))[0] == doctest::Approx(-1.0));

  const ConvexDomain ball = ConvexDomain::ball(1.0, 2);
  CHECK(ball.barrier_values(vec2(0.5, 0))[0] == doctest::Approx(-0.75));

  const ConvexDomain poly = appendix_polytope();
  const Vec phi = poly.barrier_values(vec2(0, 0));
  Vec expected(5);
  expected << -10, -30, -1, -90, -5;
  CHECK((phi - expected).norm() == doctest::Approx(0.0));

  Vec bad(3);
  bad << 0, 0, 0;
  CHECK_THROWS_AS((void)poly.barrier_values(bad), DimensionError);
}

TEST_CASE("contains is strict") {
  const ConvexDomain ball = ConvexDomain::ball(1.0, 2);
  CHECK(ball.contains(vec2(0, 0)));
  CHECK_FALSE(ball.contains(vec2(1, 0)));  // boundary excluded

  const ConvexDomain poly = appendix_polytope();
  // All five affine constraints hold strictly at (-10, 0).
  const Vec x = vec2(-10, 0);
  CHECK((poly.barrier_values(x).array() < 0.0).all());
  CHECK(poly.contains(x));
}

TEST_CASE("domain construction validation") {
  CHECK_THROWS_AS((void)ConvexDomain::ball(0.0, 2), PreconditionError);
  CHECK_THROWS_AS((void)ConvexDomain::ball(1.0, 0), PreconditionError);

  Mat A = Mat::Zero(1, 2);
  CHECK_THROWS_AS((void)ConvexDomain::polytope(A, Vec::Ones(1)), PreconditionError);

  // x < -1 and -x < -1 is empty.
  Mat B(2, 1);
  B << 1, -1;
  Vec b(2);
  b << -1, -1;
  CHECK_THROWS_WITH_AS((void)ConvexDomain::polytope(B, b),
                       doctest::Contains("empty interior"), Error);
}

TEST_CASE("psi gradient closed forms") {
  const MirrorMap hs = MirrorMap::regularized(halfspace(), 0.5);
  const Vec g = hs.gradient(vec2(0, 0));
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(0.0));

  const MirrorMap ball = MirrorMap::regularized(ConvexDomain::ball(1.0, 2), 0.5);
  const Vec gb = ball.gradient(vec2(0.5, 0));
  CHECK(gb[0] == doctest::Approx(std::pow(0.75, -0.5) + 0.5).epsilon(1e-12));
  CHECK(gb[1] == doctest::Approx(0.0));
}

TEST_CASE("gradient rejects infeasible points and names the barrier") {
  const MirrorMap map = MirrorMap::regularized(appendix_polytope(), 0.5);
  try {
    (void)map.gradient(vec2(0, 6));  // violates only row 4 (-x/3 + y < 5)
    FAIL("expected FeasibilityError");
  } catch (const FeasibilityError& e) {
    CHECK(e.constraint() == 4);
    CHECK(std::string(e.what()).find("barrier 4") != std::string::npos);
  }
}

TEST_CASE("psi hessian closed form and lower bound") {
  const MirrorMap hs = MirrorMap::regularized(halfspace(), 0.5);
  const Mat H = hs.hessian(vec2(0, 0));
  CHECK(H(0, 0) == doctest::Approx(1.5));
  CHECK(H(0, 1) == doctest::Approx(0.0));
  CHECK(H(1, 1) == doctest::Approx(1.0));

  const MirrorMap map = MirrorMap::regularized(appendix_polytope(), 0.5);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vec x = map.domain().random_interior_point(rng);
    Eigen::SelfAdjointEigenSolver<Mat> eig(map.hessian(x));
    CHECK(eig.eigenvalues()[0] >= 1.0 - 1e-8);
  }
}

TEST_CASE("derivatives match finite differences") {
  Rng rng(7);
  for (const auto* name : {"poly", "ball"}) {
    const ConvexDomain domain = std::string(name) == "poly"
                                    ? appendix_polytope()
                                    : ConvexDomain::ball(3.0, 2);
    for (const auto variant :
         {MirrorMap::Variant::Regularized, MirrorMap::Variant::LogBarrier}) {
      const MirrorMap map = variant == MirrorMap::Variant::Regularized
                                ? MirrorMap::regularized(domain, 0.4)
                                : MirrorMap::log_barrier(domain);
      for (int i = 0; i < 25; ++i) {
        const Vec x = domain.random_interior_point(rng);
        const Vec g = map.gradient(x);
        CHECK((checks::fd_gradient_of_psi(map, x) - g).norm() / (1.0 + g.norm()) <=
              1e-6);
        const Mat H = map.hessian(x);
        CHECK((checks::fd_hessian_via_gradient(map, x) - H).norm() / H.norm() <=
              1e-5);
      }
    }
  }
}

TEST_CASE("inverse gradient round trips") {
  const MirrorMap map = MirrorMap::regularized(appendix_polytope(), 0.5);
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = map.domain().random_interior_point(rng);
    const Vec z = map.gradient(x);
    const Vec x2 = map.inverse_gradient(z);
    CHECK((x2 - x).norm() <= 1e-8 * (1.0 + z.norm()));
    CHECK(map.domain().contains(x2));
  }
}

TEST_CASE("inverse gradient known values") {
  const MirrorMap hs = MirrorMap::regularized(halfspace(), 0.5);
  const Vec x = hs.inverse_gradient(vec2(1, 0));
  CHECK(x.norm() <= 1e-8);

  const MirrorMap ball = MirrorMap::regularized(ConvexDomain::ball(1.0, 3), 0.5);
  const Vec origin = ball.inverse_gradient(Vec::Zero(3));
  CHECK(origin.norm() <= 1e-9);  // unique critical point by symmetry
}

TEST_CASE("inverse gradient nonexpansive for regularized maps") {
  const MirrorMap map = MirrorMap::regularized(ConvexDomain::ball(2.0, 3), 0.3);
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const Vec z1 = 3.0 * rng.normal_vector(3);
    const Vec z2 = 3.0 * rng.normal_vector(3);
    const double dz = (z1 - z2).norm();
    if (dz < 1e-9) continue;
    const double dx = (map.inverse_gradient(z1) - map.inverse_gradient(z2)).norm();
    CHECK(dx <= dz * (1.0 + 1e-8));
  }
}

TEST_CASE("inverse gradient reports non-convergence") {
  // The log-barrier gradient of a halfspace only spans a ray, so most duals
  // are unreachable.
  const MirrorMap map = MirrorMap::log_barrier(halfspace());
  CHECK_THROWS_AS((void)map.inverse_gradient(vec2(0, 1)), NumericError);
}

TEST_CASE("find interior point") {
  CHECK(find_interior_point(ConvexDomain::ball(12.0, 6)).norm() == 0.0);

  const ConvexDomain poly = appendix_polytope();
  CHECK(poly.contains(find_interior_point(poly)));

  const ConvexDomain hs = halfspace();
  CHECK(find_interior_point(hs)[0] < 1.0);

  // Origin sits exactly on the third face of the ill-shaped triangle.
  Mat A(3, 2);
  A << 100, 0.01, 100, -0.01, -1, 0;
  Vec b(3);
  b << 1, 1, 0;
  const ConvexDomain tri = ConvexDomain::polytope(A, b);
  CHECK(tri.contains(tri.interior_point()));
}

TEST_CASE("max feasible step") {
  const ConvexDomain ball = ConvexDomain::ball(2.0, 2);
  CHECK(ball.max_feasible_step(vec2(0, 0), vec2(1, 0)) == doctest::Approx(2.0));
  CHECK(std::isinf(halfspace().max_feasible_step(vec2(0, 0), vec2(-1, 0))));

  Rng rng(17);
  const ConvexDomain poly = appendix_polytope();
  for (int i = 0; i < 200; ++i) CHECK(poly.contains(poly.random_interior_point(rng)));
}

TEST_CASE("ill-shaped triangle fixture") {
  const auto ratios = checks::ill_shaped_triangle_ratios();
  CHECK(ratios.log_barrier_min <= 3e-4);
  CHECK(ratios.regularized_min >= 1.0 - 1e-9);
}

TEST_CASE("dual tail exponent fits") {
  Mat A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  const ConvexDomain cube = ConvexDomain::polytope(A, Vec::Ones(4));

  Rng rng(23);
  PrimalSampler uniform_cube = [&rng](std::int64_t n) {
    Mat s(n, 2);
    for (std::int64_t i = 0; i < n; ++i) {
      s(i, 0) = rng.uniform(-1.0, 1.0);
      s(i, 1) = rng.uniform(-1.0, 1.0);
    }
    return s;
  };

  const auto report =
      dual_tail_exponent(MirrorMap::regularized(cube, 0.5), uniform_cube, 200000, 1.0);
  CHECK(report.exponent_estimate == doctest::Approx(2.0).epsilon(0.3));
  CHECK(report.kappa == 0.5);
  CHECK(report.beta == 1.0);
  CHECK(report.n_samples == 200000);
  CHECK(report.r_squared > 0.99);

  CHECK_THROWS_AS(
      (void)dual_tail_exponent(MirrorMap::regularized(cube, 0.5), uniform_cube, 100),
      PreconditionError);

  // A point mass far from the boundary has no tail spread.
  PrimalSampler point_mass = [](std::int64_t n) {
    Mat s = Mat::Zero(n, 2);
    s.col(0).array() = 0.1;
    return s;
  };
  CHECK_THROWS_AS(
      (void)dual_tail_exponent(MirrorMap::regularized(cube, 0.5), point_mass, 10000),
      StatsError);
}
