// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#include "mirrorflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>

#include "mirrorflow/errors.hpp"

namespace mf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dim(const Vec& x, int dim, const char* who) {
  if (static_cast<int>(x.size()) != dim) {
    std::ostringstream os;
    os << who << ": expected dimension " << dim << ", got " << x.size();
    throw DimensionError(os.str());
  }
}

}  // namespace

ConvexDomain ConvexDomain::polytope(Mat A, Vec b) {
  if (A.rows() < 1) throw PreconditionError("polytope: need at least one row");
  if (A.rows() != b.size())
    throw DimensionError("polytope: A rows and b length differ");
  if (A.cols() < 1) throw PreconditionError("polytope: dimension must be positive");
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    if (A.row(i).norm() == 0.0) {
      std::ostringstream os;
      os << "polytope: row " << i << " is zero";
      throw PreconditionError(os.str());
    }
  }
  ConvexDomain d;
  d.kind_ = Kind::Polytope;
  d.dim_ = static_cast<int>(A.cols());
  d.A_ = std::move(A);
  d.b_ = std::move(b);
  d.interior_point_ = find_interior_point(d);
  return d;
}

ConvexDomain ConvexDomain::ball(double radius, int dim) {
  if (!(radius > 0.0)) throw PreconditionError("ball: radius must be positive");
  if (dim < 1) throw PreconditionError("ball: dimension must be positive");
  ConvexDomain d;
  d.kind_ = Kind::Ball;
  d.dim_ = dim;
  d.radius_ = radius;
  d.interior_point_ = find_interior_point(d);
  return d;
}

Vec ConvexDomain::barrier_values(const Vec& x) const {
  require_dim(x, dim_, "barrier_values");
  if (kind_ == Kind::Polytope) return A_ * x - b_;
  Vec phi(1);
  phi[0] = x.squaredNorm() - radius_ * radius_;
  return phi;
}

bool ConvexDomain::contains(const Vec& x) const {
  require_dim(x, dim_, "contains");
  return (barrier_values(x).array() < 0.0).all();
}

Vec ConvexDomain::barrier_gradient(int i, const Vec& x) const {
  require_dim(x, dim_, "barrier_gradient");
  if (i < 0 || i >= num_barriers())
    throw PreconditionError("barrier_gradient: index out of range");
  if (kind_ == Kind::Polytope) return A_.row(i).transpose();
  return 2.0 * x;
}

double ConvexDomain::max_feasible_step(const Vec& x, const Vec& dir) const {
  require_dim(x, dim_, "max_feasible_step");
  require_dim(dir, dim_, "max_feasible_step");
  if (kind_ == Kind::Polytope) {
    const Vec slack = b_ - A_ * x;  // -phi, positive inside
    const Vec ad = A_ * dir;
    double smax = kInf;
    for (Eigen::Index i = 0; i < ad.size(); ++i) {
      if (ad[i] > 0.0) smax = std::min(smax, slack[i] / ad[i]);
    }
    return smax;
  }
  const double dd = dir.squaredNorm();
  if (dd == 0.0) return kInf;
  const double xd = x.dot(dir);
  const double c = x.squaredNorm() - radius_ * radius_;
  const double disc = xd * xd - dd * c;
  return (-xd + std::sqrt(std::max(disc, 0.0))) / dd;
}

Vec ConvexDomain::random_interior_point(Rng& rng, double max_fraction) const {
  const Vec& x0 = interior_point_;
  const Vec u = rng.unit_vector(dim_);
  double s = max_feasible_step(x0, u);
  if (!std::isfinite(s)) s = 10.0 * (1.0 + x0.norm());
  return x0 + rng.uniform(0.0, max_fraction) * s * u;
}

Vec find_interior_point(const ConvexDomain& domain, int max_iters) {
  const int d = domain.dim();
  Vec x = Vec::Zero(d);

  auto eval = [&](const Vec& p, int& argmax) {
    const Vec phi = domain.barrier_values(p);
    Eigen::Index idx = 0;
    const double f = phi.maxCoeff(&idx);
    argmax = static_cast<int>(idx);
    return f;
  };

  int imax = 0;
  double f = eval(x, imax);
  Vec best_x = x;
  double best_f = f;
  double push = 1.0;  // Polyak target below zero, halved when overshooting

  for (int k = 0; k < max_iters && best_f >= 0.0; ++k) {
    const Vec g = domain.barrier_gradient(imax, x);
    const double gn2 = g.squaredNorm();
    if (gn2 == 0.0) break;
    x -= ((f + push) / gn2) * g;
    f = eval(x, imax);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    } else {
      push = std::max(0.5 * push, 1e-12);
    }
  }
  if (!(best_f < 0.0))
    throw Error("empty interior: subgradient search found no strictly feasible point");

  // A few extra steps toward a larger margin; Newton inits converge faster
  // from a well-centered point.
  for (int k = 0; k < 200; ++k) {
    f = eval(best_x, imax);
    const Vec g = domain.barrier_gradient(imax, best_x);
    const double gn2 = g.squaredNorm();
    if (gn2 == 0.0) break;
    const double target = 1.5 * best_f;
    const Vec cand = best_x - ((f - target) / gn2) * g;
    int ci = 0;
    const double fc = eval(cand, ci);
    if (fc < best_f) {
      best_f = fc;
      best_x = cand;
    } else {
      break;
    }
  }
  return best_x;
}

MirrorMap::MirrorMap(ConvexDomain domain, Variant variant, double kappa)
    : domain_(std::move(domain)), variant_(variant), kappa_(kappa) {}

MirrorMap MirrorMap::regularized(ConvexDomain domain, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0))
    throw PreconditionError("regularized mirror map: kappa must lie in (0,1)");
  return MirrorMap(std::move(domain), Variant::Regularized, kappa);
}

MirrorMap MirrorMap::log_barrier(ConvexDomain domain) {
  return MirrorMap(std::move(domain), Variant::LogBarrier, 0.0);
}

namespace {

// Throws when some phi_i(x) >= 0, naming the violated barrier.
void require_feasible(const Vec& phi) {
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    if (!(phi[i] < 0.0)) {
      std::ostringstream os;
      os << "infeasible point: barrier " << i << " has value " << phi[i];
      throw FeasibilityError(os.str(), static_cast<int>(i));
    }
  }
}

}  // namespace

double MirrorMap::psi(const Vec& x) const {
  const Vec phi = domain_.barrier_values(x);
  require_feasible(phi);
  if (variant_ == Variant::LogBarrier) return -(-phi.array()).log().sum();
  const double barrier =
      -((-phi.array()).pow(1.0 - kappa_)).sum() / (1.0 - kappa_);
  return barrier + 0.5 * x.squaredNorm();
}

Vec MirrorMap::gradient(const Vec& x) const {
  const Vec phi = domain_.barrier_values(x);
  require_feasible(phi);
  if (domain_.kind() == ConvexDomain::Kind::Polytope) {
    // grad = sum_i w_i a_i (+ x), with w_i = (-phi_i)^{-kappa} or 1/(-phi_i)
    Vec w;
    if (variant_ == Variant::Regularized)
      w = (-phi.array()).pow(-kappa_);
    else
      w = (-phi.array()).inverse();
    Vec g = domain_.A().transpose() * w;
    if (variant_ == Variant::Regularized) g += x;
    return g;
  }
  const double mphi = -phi[0];
  if (variant_ == Variant::Regularized)
    return std::pow(mphi, -kappa_) * 2.0 * x + x;
  return (2.0 / mphi) * x;
}

Mat MirrorMap::hessian(const Vec& x) const {
  const Vec phi = domain_.barrier_values(x);
  require_feasible(phi);
  const int d = domain_.dim();
  if (domain_.kind() == ConvexDomain::Kind::Polytope) {
    // hess = A^T diag(c) A (+ I), c_i = kappa(-phi_i)^{-kappa-1} or phi_i^{-2}
    Vec c;
    if (variant_ == Variant::Regularized)
      c = kappa_ * (-phi.array()).pow(-kappa_ - 1.0);
    else
      c = phi.array().square().inverse();
    Mat H = domain_.A().transpose() * c.asDiagonal() * domain_.A();
    if (variant_ == Variant::Regularized) H += Mat::Identity(d, d);
    return H;
  }
  const double mphi = -phi[0];
  Mat H;
  if (variant_ == Variant::Regularized) {
    H = (4.0 * kappa_ * std::pow(mphi, -kappa_ - 1.0)) * (x * x.transpose());
    H.diagonal().array() += 2.0 * std::pow(mphi, -kappa_) + 1.0;
  } else {
    H = (4.0 / (mphi * mphi)) * (x * x.transpose());
    H.diagonal().array() += 2.0 / mphi;
  }
  return H;
}

Vec MirrorMap::inverse_gradient(const Vec& z) const {
  require_dim(z, domain_.dim(), "inverse_gradient");
  if (!z.allFinite()) throw NumericError("inverse_gradient: z is not finite");

  const double tol_accept = 1e-8 * (1.0 + z.norm());
  const double tol_target = 1e-13 * (1.0 + z.norm());

  Vec x = domain_.interior_point();
  double res = (gradient(x) - z).norm();
  int stall = 0;

  for (int iter = 0; iter < kNewtonMaxIters && res > tol_target; ++iter) {
    const Vec g = gradient(x) - z;
    const Mat H = hessian(x);
    Eigen::LLT<Mat> llt(H);
    Vec p;
    if (llt.info() == Eigen::Success) {
      p = llt.solve(-g);
    } else {
      Mat Hr = H;
      Hr.diagonal().array() += 1e-12 * (1.0 + H.trace());
      p = Eigen::LDLT<Mat>(Hr).solve(-g);
    }

    double alpha = std::min(1.0, 0.99 * domain_.max_feasible_step(x, p));
    const double f0 = psi(x) - z.dot(x);
    const double slope = g.dot(p);  // negative for a descent direction
    // Armijo backtracking, skipped once the predicted decrease falls below
    // the floating point resolution of the merit value (the damped full step
    // is safe inside the quadratic convergence basin).
    if (std::abs(alpha * slope) > 1e-12 * (1.0 + std::abs(f0))) {
      int backtracks = 0;
      while (backtracks < 60) {
        const Vec cand = x + alpha * p;
        const double fc = psi(cand) - z.dot(cand);
        if (fc <= f0 + 1e-4 * alpha * slope) break;
        alpha *= 0.5;
        ++backtracks;
      }
    }
    x += alpha * p;

    const double new_res = (gradient(x) - z).norm();
    stall = (new_res < 0.999 * res) ? 0 : stall + 1;
    res = new_res;
    if (stall >= 10) break;
  }

  if (!(res <= tol_accept)) {
    std::ostringstream os;
    os << "inverse_gradient: Newton did not converge, residual " << res
       << " exceeds " << tol_accept;
    throw NumericError(os.str());
  }
  return x;
}

TailReport dual_tail_exponent(const MirrorMap& map, const PrimalSampler& sampler,
                              std::int64_t n, double beta_hint) {
  if (n < 10000)
    throw PreconditionError("dual_tail_exponent: need at least 1e4 samples");

  const Mat samples = sampler(n);
  if (samples.rows() != n || samples.cols() != map.domain().dim())
    throw DimensionError("dual_tail_exponent: sampler batch has wrong shape");

  std::vector<double> norms(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    norms[static_cast<std::size_t>(i)] = map.gradient(samples.row(i).transpose()).norm();

  const std::int64_t tail = n / 10;
  if (tail < 100) throw StatsError("dual_tail_exponent: fewer than 100 tail points");
  std::partial_sort(norms.begin(), norms.begin() + tail, norms.end(),
                    std::greater<double>());

  // log CCDF: P(||z|| >= r_(i)) ~ (i+1)/n at the (i+1)-th largest norm.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::int64_t i = 0; i < tail; ++i) {
    const double r = norms[static_cast<std::size_t>(i)];
    if (!(r > 0.0)) throw StatsError("dual_tail_exponent: nonpositive norm in tail");
    const double lx = std::log(r);
    const double ly = std::log(static_cast<double>(i + 1) / static_cast<double>(n));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double m = static_cast<double>(tail);
  const double varx = sxx - sx * sx / m;
  const double vary = syy - sy * sy / m;
  const double cov = sxy - sx * sy / m;
  if (varx < 1e-9 * m)
    throw StatsError("dual_tail_exponent: degenerate fit, no spread in tail norms");

  TailReport report;
  report.exponent_estimate = -cov / varx;
  report.beta = beta_hint;
  report.kappa =
      map.variant() == MirrorMap::Variant::Regularized ? map.kappa() : 1.0;
  report.r_squared = (vary > 0.0) ? (cov * cov) / (varx * vary) : 0.0;
  report.n_samples = n;
  return report;
}

}  // namespace mf
