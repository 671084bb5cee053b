// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#include "mirrorflow/prior.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mirrorflow/errors.hpp"

namespace mf {

StudentTPrior::StudentTPrior(int dim_, double nu_) : dim(dim_), nu(nu_) {
  if (dim < 1) throw PreconditionError("student-t prior: dimension must be positive");
  if (!(nu > 0.0)) throw PreconditionError("student-t prior: nu must be positive");
}

double StudentTPrior::second_moment() const {
  if (nu > 2.0) return dim * nu / (nu - 2.0);
  return std::numeric_limits<double>::infinity();
}

double Prior::second_moment() const {
  if (kind == PriorKind::Gaussian) return static_cast<double>(dim);
  return StudentTPrior(dim, nu).second_moment();
}

double Prior::log_density_unnormalized(const Vec& x) const {
  if (kind == PriorKind::Gaussian) return -0.5 * x.squaredNorm();
  return -0.5 * (nu + dim) * std::log1p(x.squaredNorm() / nu);
}

namespace {

Mat draw_student_t(int dim, double nu, std::int64_t n, Rng& rng) {
  Mat out(n, dim);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) out(i, j) = rng.normal();
    const double q = rng.chi_square(nu);
    out.row(i) *= std::sqrt(nu / q);
  }
  return out;
}

Mat draw_gaussian(int dim, std::int64_t n, Rng& rng) {
  Mat out(n, dim);
  for (std::int64_t i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) out(i, j) = rng.normal();
  return out;
}

}  // namespace

Mat sample_student_t(const StudentTPrior& prior, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("sample_student_t: n must be >= 1");
  Rng rng(seed);
  return draw_student_t(prior.dim, prior.nu, n, rng);
}

Mat sample_prior(const Prior& prior, std::int64_t n, Rng& rng) {
  if (n < 0) throw PreconditionError("sample_prior: n must be nonnegative");
  if (prior.kind == PriorKind::Gaussian) return draw_gaussian(prior.dim, n, rng);
  return draw_student_t(prior.dim, prior.nu, n, rng);
}

Mat sample_prior(const Prior& prior, std::int64_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_prior(prior, n, rng);
}

TruncatedMixtureTarget::TruncatedMixtureTarget(std::vector<Component> components,
                                               ConvexDomain domain)
    : components_(std::move(components)), domain_(std::move(domain)) {
  const int k = static_cast<int>(components_.size());
  if (k < 1) throw PreconditionError("mixture: need at least one component");
  weights_.resize(k);
  for (int i = 0; i < k; ++i) {
    const auto& c = components_[i];
    if (static_cast<int>(c.mean.size()) != domain_.dim() ||
        static_cast<int>(c.diag_cov.size()) != domain_.dim())
      throw DimensionError("mixture: component shape does not match domain");
    if (!(c.diag_cov.array() > 0.0).all())
      throw PreconditionError("mixture: variances must be positive");
    if (c.weight < 0.0) throw PreconditionError("mixture: negative weight");
    weights_[i] = c.weight;
  }
  const double total = weights_.sum();
  if (std::abs(total - 1.0) > 1e-9)
    throw PreconditionError("mixture: weights must sum to 1");
  weights_ /= total;

  // Estimate acceptance rates; a fully infeasible component would starve the
  // rejection sampler.
  const int probes = 10000;
  acceptance_.resize(k);
  Rng rng(0x6d69787265u, streams::kTargetGen);
  Vec x(domain_.dim());
  for (int i = 0; i < k; ++i) {
    const Vec sd = components_[i].diag_cov.array().sqrt();
    int accepted = 0;
    for (int p = 0; p < probes; ++p) {
      for (int j = 0; j < domain_.dim(); ++j)
        x[j] = components_[i].mean[j] + sd[j] * rng.normal();
      if (domain_.contains(x)) ++accepted;
    }
    acceptance_[i] = static_cast<double>(accepted) / probes;
    if (acceptance_[i] < 1e-3) {
      std::ostringstream os;
      os << "mixture: component " << i << " acceptance rate "
         << acceptance_[i] << " is below 1e-3";
      throw SamplingError(os.str());
    }
  }
}

Mat sample_truncated_mixture(const TruncatedMixtureTarget& target, std::int64_t n,
                             std::uint64_t seed, std::vector<int>* labels) {
  if (n < 1) throw PreconditionError("sample_truncated_mixture: n must be >= 1");
  Rng rng(seed);
  const int d = target.dim();
  Mat out(n, d);
  if (labels) labels->assign(static_cast<std::size_t>(n), -1);

  std::int64_t proposals = 0, accepted = 0;
  Vec x(d);
  for (std::int64_t i = 0; i < n;) {
    const int c = rng.categorical(target.weights());
    const auto& comp = target.components()[static_cast<std::size_t>(c)];
    for (int j = 0; j < d; ++j)
      x[j] = comp.mean[j] + std::sqrt(comp.diag_cov[j]) * rng.normal();
    ++proposals;
    if (target.domain().contains(x)) {
      out.row(i) = x.transpose();
      if (labels) (*labels)[static_cast<std::size_t>(i)] = c;
      ++accepted;
      ++i;
    }
    if (proposals % 100000 == 0 &&
        static_cast<double>(accepted) < 1e-3 * static_cast<double>(proposals)) {
      throw SamplingError("sample_truncated_mixture: acceptance below 1e-3 over 1e5 proposals");
    }
  }
  return out;
}

FiniteAtomTarget::FiniteAtomTarget(Mat atoms_, Vec weights_)
    : atoms(std::move(atoms_)), weights(std::move(weights_)) {
  if (atoms.rows() < 1) throw PreconditionError("atom target: need at least one atom");
  if (atoms.rows() != weights.size())
    throw DimensionError("atom target: atoms and weights differ in length");
  if ((weights.array() < 0.0).any())
    throw PreconditionError("atom target: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-9)
    throw PreconditionError("atom target: weights must sum to 1");
}

double FiniteAtomTarget::second_moment() const {
  return (atoms.rowwise().squaredNorm().array() * weights.array()).sum();
}

Mat sample_atoms(const FiniteAtomTarget& target, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("sample_atoms: n must be >= 1");
  Rng rng(seed);
  Mat out(n, target.dim());
  for (std::int64_t i = 0; i < n; ++i)
    out.row(i) = target.atoms.row(rng.categorical(target.weights));
  return out;
}

}  // namespace mf
