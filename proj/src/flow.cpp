// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#include "mirrorflow/flow.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "mirrorflow/errors.hpp"

namespace mf {

namespace {

bool near_integer(double x) { return std::abs(x - std::llround(x)) <= 1e-9 * std::max(1.0, std::abs(x)); }

}  // namespace

void SamplerConfig::validate() const {
  if (!(h > 0.0)) throw PreconditionError("sampler: h must be positive");
  if (!near_integer(1.0 / h))
    throw PreconditionError("sampler: 1/h must be an integer");
  if (!(T > 0.0 && T < 1.0))
    throw PreconditionError("sampler: T must lie in (0,1)");
  if (!near_integer(T / h))
    throw PreconditionError("sampler: T/h must be an integer");
  if (n < 0) throw PreconditionError("sampler: n must be nonnegative");
}

int SamplerConfig::num_steps() const {
  return static_cast<int>(std::llround(T / h));
}

std::pair<Vec, Vec> make_training_pair(const Vec& z0, const Vec& z1, double t) {
  if (z0.size() != z1.size())
    throw DimensionError("make_training_pair: endpoint dimensions differ");
  if (!(t >= 0.0 && t <= 1.0))
    throw PreconditionError("make_training_pair: t must lie in [0,1]");
  return {(1.0 - t) * z0 + t * z1, z1 - z0};
}

SampleBatch euler_sample(const VelocityField& v, const SamplerConfig& cfg,
                         const Prior& prior) {
  cfg.validate();
  if (prior.dim != v.dim())
    throw DimensionError("euler_sample: prior and velocity dimensions differ");

  Rng rng(cfg.seed, streams::kSamplePrior);
  Mat Z = sample_prior(prior, cfg.n, rng);
  Mat V;
  const int steps = cfg.num_steps();
  for (int k = 0; k < steps; ++k) {
    const double t = k * cfg.h;
    v.eval(Z, t, V);
    Z += cfg.h * V;
    if (!Z.allFinite()) {
      for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        if (!Z.row(i).allFinite()) {
          std::ostringstream os;
          os << "euler_sample: trajectory " << i << " non-finite at step " << k;
          throw NumericError(os.str());
        }
      }
    }
  }

  SampleBatch out;
  out.data = std::move(Z);
  out.space = Space::Dual;
  out.seed = cfg.seed;
  std::ostringstream os;
  os << "euler h=" << cfg.h << " T=" << cfg.T;
  out.generator = os.str();
  return out;
}

Vec euler_trajectory(const VelocityField& v, Vec z0, double h, double T) {
  if (!(h > 0.0 && T > 0.0 && T < 1.0))
    throw PreconditionError("euler_trajectory: need h > 0 and T in (0,1)");
  const auto steps = static_cast<int>(std::llround(T / h));
  Mat Z(1, z0.size());
  Z.row(0) = z0.transpose();
  Mat V;
  for (int k = 0; k < steps; ++k) {
    v.eval(Z, k * h, V);
    Z += h * V;
  }
  return Z.row(0).transpose();
}

MlpVelocity mirror_train(const MirrorMap& map, const SampleBatch& primal_data,
                         const Prior& prior, const TrainConfig& cfg,
                         const MlpArchitecture& arch, TrainReport* report) {
  if (primal_data.n() == 0)
    throw PreconditionError("mirror_train: empty data batch");
  if (primal_data.space != Space::Primal)
    throw PreconditionError("mirror_train: data batch must live in primal space");
  const int d = map.domain().dim();
  if (primal_data.dim() != d)
    throw DimensionError("mirror_train: data dimension does not match domain");
  if (prior.dim != d)
    throw DimensionError("mirror_train: prior dimension does not match domain");

  // Push the dataset through grad Psi once and train against the cached rows.
  Mat dual(primal_data.n(), d);
  for (Eigen::Index i = 0; i < primal_data.n(); ++i) {
    try {
      dual.row(i) = map.gradient(primal_data.data.row(i).transpose()).transpose();
    } catch (const FeasibilityError& e) {
      std::ostringstream os;
      os << "mirror_train: data row " << i << " is infeasible (" << e.what() << ")";
      throw FeasibilityError(os.str(), e.constraint());
    }
  }

  // Train in standardized dual coordinates. Straight-line interpolation and
  // Euler stepping commute with affine maps, so this only conditions the
  // regression; the affine change of variables is folded back into the first
  // and last layer below and the returned field acts on raw dual points.
  Vec mu = dual.colwise().mean().transpose();
  Vec sd(d);
  for (int j = 0; j < d; ++j) {
    const double var =
        (dual.col(j).array() - mu[j]).square().sum() /
        std::max<double>(1.0, static_cast<double>(dual.rows() - 1));
    sd[j] = std::sqrt(var);
    if (!(sd[j] > 1e-8)) sd[j] = 1.0;
  }
  Mat dual_n = dual;
  dual_n.rowwise() -= mu.transpose();
  dual_n.array().rowwise() /= sd.transpose().array();

  MlpVelocity model(d, arch.hidden, arch.time_frequencies, cfg.seed);
  Rng pair_rng(cfg.seed, streams::kPairProvider);
  const auto rows = static_cast<std::uint64_t>(dual_n.rows());
  PairProvider provider = [&](std::int64_t n, Mat& z0, Mat& z1) {
    z0 = sample_prior(prior, n, pair_rng);
    z0.rowwise() -= mu.transpose();
    z0.array().rowwise() /= sd.transpose().array();
    z1.resize(n, d);
    for (std::int64_t i = 0; i < n; ++i)
      z1.row(i) = dual_n.row(static_cast<Eigen::Index>(pair_rng.next_u64() % rows));
  };

  TrainReport rep = train(model, cfg, provider);

  // Fold z' = (z - mu) / sd into the input layer and v = sd * v' into the
  // output layer.
  {
    const auto& dims = model.layer_dims();
    double* p = model.params().data();
    const int in0 = dims[0];
    const int out0 = dims[1];
    Eigen::Map<Mat> W0(p, in0, out0);
    Eigen::Map<Vec> b0(p + static_cast<std::ptrdiff_t>(in0) * out0, out0);
    for (int j = 0; j < d; ++j) W0.row(j) /= sd[j];
    b0 -= W0.topRows(d).transpose() * mu;

    std::ptrdiff_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
      offset += static_cast<std::ptrdiff_t>(dims[l] + 1) * dims[l + 1];
    const int in_last = dims[dims.size() - 2];
    offset -= static_cast<std::ptrdiff_t>(in_last + 1) * d;
    Eigen::Map<Mat> WL(model.params().data() + offset, in_last, d);
    Eigen::Map<Vec> bL(model.params().data() + offset +
                           static_cast<std::ptrdiff_t>(in_last) * d,
                       d);
    for (int j = 0; j < d; ++j) {
      WL.col(j) *= sd[j];
      bL[j] *= sd[j];
    }
  }

  if (report) *report = std::move(rep);
  return model;
}

SampleBatch mirror_sample(const MirrorMap& map, const VelocityField& v,
                          const SamplerConfig& cfg, const Prior& prior) {
  SampleBatch dual = euler_sample(v, cfg, prior);
  SampleBatch out;
  out.data.resize(dual.n(), dual.dim());
  for (Eigen::Index i = 0; i < dual.n(); ++i) {
    try {
      out.data.row(i) =
          map.inverse_gradient(dual.data.row(i).transpose()).transpose();
    } catch (const NumericError& e) {
      std::ostringstream os;
      os << "mirror_sample: row " << i << ": " << e.what();
      throw NumericError(os.str());
    }
  }
  out.space = Space::Primal;
  out.seed = cfg.seed;
  out.generator = dual.generator + " + inverse mirror map";
  return out;
}

Vec primal_velocity(const MirrorMap& map, const VelocityField& v_dual,
                    const Vec& x, double t) {
  if (!(t >= 0.0 && t < 1.0))
    throw PreconditionError("primal_velocity: t must lie in [0,1)");
  const Vec z = map.gradient(x);  // throws FeasibilityError when x infeasible
  const Vec v = v_dual.eval_point(z, t);
  return Eigen::LLT<Mat>(map.hessian(x)).solve(v);
}

void write_batch_csv(const SampleBatch& batch, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw FormatError("write_batch_csv: cannot open " + path);
  const int d = batch.dim();
  for (int j = 0; j < d; ++j) f << (j ? "," : "") << "dim_" << j;
  f << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < batch.n(); ++i) {
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", batch.data(i, j));
      f << (j ? "," : "") << buf;
    }
    f << '\n';
  }
  if (!f) throw FormatError("write_batch_csv: write failed for " + path);

  nlohmann::json meta;
  meta["space"] = batch.space == Space::Primal ? "primal" : "dual";
  meta["seed"] = batch.seed;
  meta["generator"] = batch.generator;
  std::ofstream mf_(path + ".meta.json");
  mf_ << meta.dump(2) << '\n';
}

SampleBatch read_batch_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("read_batch_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw FormatError("read_batch_csv: missing header");
  int d = 1;
  for (char c : line)
    if (c == ',') ++d;

  std::vector<double> values;
  std::int64_t rows = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string cell;
    int got = 0;
    while (std::getline(is, cell, ',')) {
      char* end = nullptr;
      values.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) throw FormatError("read_batch_csv: bad value in " + path);
      ++got;
    }
    if (got != d) throw FormatError("read_batch_csv: ragged row in " + path);
    ++rows;
  }

  SampleBatch batch;
  batch.data.resize(rows, d);
  for (std::int64_t i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j)
      batch.data(i, j) = values[static_cast<std::size_t>(i * d + j)];

  std::ifstream mf_(path + ".meta.json");
  if (mf_) {
    nlohmann::json meta = nlohmann::json::parse(mf_, nullptr, false);
    if (!meta.is_discarded()) {
      batch.space = meta.value("space", "primal") == "dual" ? Space::Dual : Space::Primal;
      batch.seed = meta.value("seed", std::uint64_t{0});
      batch.generator = meta.value("generator", "");
    }
  } else {
    batch.space = Space::Primal;
  }
  return batch;
}

}  // namespace mf
