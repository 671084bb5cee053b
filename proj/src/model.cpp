// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#include "mirrorflow/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mirrorflow/errors.hpp"
#include "mirrorflow/rng.hpp"

namespace mf {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }

inline double silu_derivative(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

std::size_t param_count(const std::vector<int>& dims) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    n += static_cast<std::size_t>(dims[l] + 1) * static_cast<std::size_t>(dims[l + 1]);
  return n;
}

}  // namespace

MlpVelocity::MlpVelocity(int data_dim, std::vector<int> hidden_widths,
                         int time_frequencies, std::uint64_t init_seed)
    : data_dim_(data_dim), time_frequencies_(time_frequencies) {
  if (data_dim < 1) throw PreconditionError("mlp: data dimension must be positive");
  if (time_frequencies < 0)
    throw PreconditionError("mlp: time_frequencies must be nonnegative");
  layer_dims_.push_back(data_dim + time_features());
  for (int w : hidden_widths) {
    if (w < 1) throw PreconditionError("mlp: hidden width must be positive");
    layer_dims_.push_back(w);
  }
  layer_dims_.push_back(data_dim);

  params_ = Vec::Zero(static_cast<Eigen::Index>(param_count(layer_dims_)));
  Rng rng(init_seed, streams::kModelInit);
  Eigen::Index offset = 0;
  const std::size_t layers = layer_dims_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = layer_dims_[l];
    const int out = layer_dims_[l + 1];
    const bool last = (l + 1 == layers);
    const double scale = last ? 0.0 : 1.0 / std::sqrt(static_cast<double>(in));
    for (int i = 0; i < in * out; ++i) params_[offset + i] = scale * rng.normal();
    offset += static_cast<Eigen::Index>(in) * out;
    offset += out;  // biases stay zero
  }
}

Mat MlpVelocity::embed(const Mat& Z, const Vec& t) const {
  const Eigen::Index n = Z.rows();
  Mat X(n, layer_dims_.front());
  X.leftCols(data_dim_) = Z;
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, data_dim_) = t[i];
    for (int j = 0; j < time_frequencies_; ++j) {
      const double w = kTwoPi * t[i] * static_cast<double>(1 << j);
      X(i, data_dim_ + 1 + 2 * j) = std::sin(w);
      X(i, data_dim_ + 2 + 2 * j) = std::cos(w);
    }
  }
  return X;
}

Mat MlpVelocity::forward_batch(const Mat& Z, const Vec& t) const {
  if (Z.cols() != data_dim_) throw DimensionError("mlp forward: wrong input dimension");
  if (Z.rows() != t.size()) throw DimensionError("mlp forward: Z rows and t length differ");
  if (!Z.allFinite() || !t.allFinite())
    throw NumericError("mlp forward: non-finite input");

  Mat X = embed(Z, t);
  const std::size_t layers = layer_dims_.size() - 1;
  const double* p = params_.data();
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = layer_dims_[l];
    const int out = layer_dims_[l + 1];
    Eigen::Map<const Mat> W(p, in, out);
    Eigen::Map<const Vec> b(p + static_cast<std::ptrdiff_t>(in) * out, out);
    Mat A = X * W;
    A.rowwise() += b.transpose();
    if (l + 1 < layers) {
      X = A.unaryExpr([](double v) { return silu(v); });
    } else {
      X = std::move(A);
    }
    p += static_cast<std::ptrdiff_t>(in + 1) * out;
  }
  return X;
}

Vec MlpVelocity::forward(const Vec& z, double t) const {
  Mat Z(1, z.size());
  Z.row(0) = z.transpose();
  Vec tv(1);
  tv[0] = t;
  return forward_batch(Z, tv).row(0).transpose();
}

void MlpVelocity::eval(const Mat& Z, double t, Mat& out) const {
  out = forward_batch(Z, Vec::Constant(Z.rows(), t));
}

double MlpVelocity::loss_and_grad(const Mat& Zt, const Vec& t, const Mat& target,
                                  Vec& grad) const {
  const Eigen::Index n = Zt.rows();
  if (n == 0) throw PreconditionError("loss_and_grad: empty batch");
  if (target.rows() != n || target.cols() != data_dim_)
    throw DimensionError("loss_and_grad: target shape mismatch");

  const std::size_t layers = layer_dims_.size() - 1;
  std::vector<Mat> acts(layers + 1);   // post-activation inputs per layer
  std::vector<Mat> preacts(layers);    // pre-activation values
  acts[0] = embed(Zt, t);
  const double* p = params_.data();
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = layer_dims_[l];
    const int out = layer_dims_[l + 1];
    Eigen::Map<const Mat> W(p, in, out);
    Eigen::Map<const Vec> b(p + static_cast<std::ptrdiff_t>(in) * out, out);
    preacts[l] = acts[l] * W;
    preacts[l].rowwise() += b.transpose();
    acts[l + 1] = (l + 1 < layers)
                      ? preacts[l].unaryExpr([](double v) { return silu(v); })
                      : preacts[l];
    p += static_cast<std::ptrdiff_t>(in + 1) * out;
  }

  const Mat resid = acts[layers] - target;
  const Vec per_sample = resid.rowwise().squaredNorm();
  const double loss = per_sample.mean();
  if (!std::isfinite(loss)) {
    Eigen::Index bad = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!std::isfinite(per_sample[i])) {
        bad = i;
        break;
      }
    std::ostringstream os;
    os << "loss_and_grad: non-finite loss at sample " << bad;
    throw NumericError(os.str());
  }

  grad.setZero(params_.size());
  Mat delta = (2.0 / static_cast<double>(n)) * resid;  // dL/d(preact of last)
  for (std::size_t l = layers; l-- > 0;) {
    const int in = layer_dims_[l];
    const int out = layer_dims_[l + 1];
    const std::ptrdiff_t offset =
        static_cast<std::ptrdiff_t>(p - params_.data()) -
        static_cast<std::ptrdiff_t>(in + 1) * out;
    p = params_.data() + offset;
    Eigen::Map<const Mat> W(p, in, out);
    Eigen::Map<Mat> dW(grad.data() + offset, in, out);
    Eigen::Map<Vec> db(grad.data() + offset + static_cast<std::ptrdiff_t>(in) * out, out);
    dW = acts[l].transpose() * delta;
    db = delta.colwise().sum().transpose();
    if (l > 0) {
      Mat dx = delta * W.transpose();
      delta = dx.cwiseProduct(
          preacts[l - 1].unaryExpr([](double v) { return silu_derivative(v); }));
    }
  }
  return loss;
}

double MlpVelocity::loss(const Mat& Zt, const Vec& t, const Mat& target) const {
  const Mat out = forward_batch(Zt, t);
  return (out - target).rowwise().squaredNorm().mean();
}

void MlpVelocity::save_params(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw FormatError("save_params: cannot open " + path);
  f << "mirrorflow-mlp v1\n";
  f << "layer_dims";
  for (int d : layer_dims_) f << ' ' << d;
  f << "\ntime_features " << time_features();
  f << "\nactivation silu";
  f << "\nparams " << params_.size() << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < params_.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", params_[i]);
    f << buf << '\n';
  }
  if (!f) throw FormatError("save_params: write failed for " + path);
}

namespace {

struct CheckpointHeader {
  std::vector<int> layer_dims;
  int time_features = 0;
  Eigen::Index n_params = 0;
};

CheckpointHeader read_header(std::istream& f, const std::string& path) {
  CheckpointHeader h;
  std::string line;
  if (!std::getline(f, line) || line != "mirrorflow-mlp v1")
    throw FormatError("load_params: bad magic in " + path);
  if (!std::getline(f, line)) throw FormatError("load_params: truncated header");
  {
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key != "layer_dims") throw FormatError("load_params: expected layer_dims");
    int v;
    while (is >> v) h.layer_dims.push_back(v);
    if (h.layer_dims.size() < 2) throw FormatError("load_params: too few layer dims");
  }
  if (!std::getline(f, line)) throw FormatError("load_params: truncated header");
  {
    std::istringstream is(line);
    std::string key;
    is >> key >> h.time_features;
    if (key != "time_features") throw FormatError("load_params: expected time_features");
  }
  if (!std::getline(f, line) || line != "activation silu")
    throw FormatError("load_params: unsupported activation");
  if (!std::getline(f, line)) throw FormatError("load_params: truncated header");
  {
    std::istringstream is(line);
    std::string key;
    is >> key >> h.n_params;
    if (key != "params") throw FormatError("load_params: expected params count");
  }
  return h;
}

Vec read_values(std::istream& f, Eigen::Index n, const std::string& path) {
  Vec values(n);
  std::string line;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::getline(f, line))
      throw FormatError("load_params: truncated file " + path);
    char* end = nullptr;
    values[i] = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) throw FormatError("load_params: bad value in " + path);
  }
  return values;
}

}  // namespace

void MlpVelocity::load_params(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("load_params: cannot open " + path);
  const CheckpointHeader h = read_header(f, path);
  if (h.layer_dims != layer_dims_ || h.time_features != time_features())
    throw FormatError("load_params: checkpoint architecture does not match model");
  if (h.n_params != params_.size())
    throw FormatError("load_params: parameter count mismatch");
  params_ = read_values(f, h.n_params, path);
}

MlpVelocity MlpVelocity::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("load: cannot open " + path);
  const CheckpointHeader h = read_header(f, path);
  const int data_dim = h.layer_dims.back();
  const int tf = h.time_features;
  if (tf < 1 || tf % 2 == 0) throw FormatError("load: bad time_features");
  if (h.layer_dims.front() != data_dim + tf)
    throw FormatError("load: inconsistent input width");
  std::vector<int> hidden(h.layer_dims.begin() + 1, h.layer_dims.end() - 1);
  MlpVelocity model(data_dim, hidden, (tf - 1) / 2, 0);
  if (h.n_params != model.params_.size())
    throw FormatError("load: parameter count mismatch");
  model.params_ = read_values(f, h.n_params, path);
  return model;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw PreconditionError("train: learning_rate must be positive");
  if (batch_size < 2) throw PreconditionError("train: batch_size must be >= 2");
  if (steps < 0) throw PreconditionError("train: steps must be nonnegative");
  if (!(grad_clip_norm > 0.0)) throw PreconditionError("train: grad_clip_norm must be positive");
}

TrainReport train(MlpVelocity& model, const TrainConfig& cfg,
                  const PairProvider& pairs) {
  cfg.validate();
  TrainReport report;
  Rng rng(cfg.seed, streams::kTrainBatch);

  Vec adam_m = Vec::Zero(model.params().size());
  Vec adam_v = Vec::Zero(model.params().size());
  Vec grad(model.params().size());
  Mat z0, z1;
  const int record_every = std::max(1, cfg.steps / 200);

  double last_loss = 0.0;
  for (int step = 0; step < cfg.steps; ++step) {
    pairs(cfg.batch_size, z0, z1);
    Vec t(cfg.batch_size);
    for (int i = 0; i < cfg.batch_size; ++i) t[i] = rng.uniform();
    Mat zt = z0;
    for (int i = 0; i < cfg.batch_size; ++i)
      zt.row(i) = (1.0 - t[i]) * z0.row(i) + t[i] * z1.row(i);
    const Mat target = z1 - z0;

    double loss;
    try {
      loss = model.loss_and_grad(zt, t, target, grad);
    } catch (const NumericError& e) {
      std::ostringstream os;
      os << "training aborted at step " << step << ": " << e.what();
      throw NumericError(os.str());
    }
    last_loss = loss;

    const double gnorm = grad.norm();
    if (gnorm > cfg.grad_clip_norm) grad *= cfg.grad_clip_norm / gnorm;

    const double b1 = cfg.adam_betas.first;
    const double b2 = cfg.adam_betas.second;
    adam_m = b1 * adam_m + (1.0 - b1) * grad;
    adam_v = b2 * adam_v + (1.0 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1, step + 1);
    const double c2 = 1.0 - std::pow(b2, step + 1);
    model.params() -=
        (cfg.learning_rate / c1) *
        (adam_m.array() / ((adam_v.array() / c2).sqrt() + cfg.adam_eps)).matrix();

    if (step % record_every == 0 || step + 1 == cfg.steps)
      report.loss_curve.emplace_back(step, loss);
  }
  if (report.loss_curve.empty()) report.loss_curve.emplace_back(0, 0.0);
  report.final_loss = last_loss;
  return report;
}

}  // namespace mf
