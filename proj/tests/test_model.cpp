// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mirrorflow/errors.hpp"
#include "mirrorflow/model.hpp"
#include "mirrorflow/oracle.hpp"
#include "mirrorflow/verify.hpp"

using namespace mf;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("zero-initialized model outputs zero") {
  const MlpVelocity model(3, {16, 16}, 4, 123);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const Vec v = model.forward(rng.normal_vector(3), rng.uniform());
    CHECK(v.norm() == 0.0);
  }
}

TEST_CASE("forward is pure and validates inputs") {
  MlpVelocity model(2, {8}, 2, 5);
  Rng rng(2);
  for (Eigen::Index i = 0; i < model.params().size(); ++i)
    model.params()[i] = 0.3 * rng.normal();

  const Vec z = rng.normal_vector(2);
  const Vec a = model.forward(z, 0.25);
  const Vec b = model.forward(z, 0.25);
  CHECK((a - b).norm() == 0.0);

  Vec bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)model.forward(bad, 0.5), NumericError);
}

TEST_CASE("loss and gradient basics") {
  MlpVelocity model(2, {8, 8}, 2, 9);
  const int n = 4;
  Mat zt = Mat::Zero(n, 2);
  Vec t = Vec::Constant(n, 0.5);
  Mat target = Mat::Zero(n, 2);

  Vec grad;
  // zero params, zero targets -> zero loss and gradient
  MlpVelocity zero_model(2, {8, 8}, 2, 9);
  zero_model.params().setZero();
  CHECK(zero_model.loss_and_grad(zt, t, target, grad) == 0.0);
  CHECK(grad.norm() == 0.0);

  // duplicating the batch leaves loss and grad unchanged
  Rng rng(3);
  for (Eigen::Index i = 0; i < model.params().size(); ++i)
    model.params()[i] = 0.4 * rng.normal();
  for (int i = 0; i < n; ++i) {
    zt.row(i) = rng.normal_vector(2).transpose();
    target.row(i) = rng.normal_vector(2).transpose();
    t[i] = rng.uniform();
  }
  Vec g1, g2;
  const double l1 = model.loss_and_grad(zt, t, target, g1);

  Mat zt2(2 * n, 2), target2(2 * n, 2);
  Vec t2(2 * n);
  zt2 << zt, zt;
  target2 << target, target;
  t2 << t, t;
  const double l2 = model.loss_and_grad(zt2, t2, target2, g2);
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-14));
  CHECK((g1 - g2).norm() <= 1e-14 * (1.0 + g1.norm()));

  // non-finite loss names the offending sample
  target(2, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS((void)model.loss_and_grad(zt, t, target, g1),
                       doctest::Contains("sample 2"), NumericError);
}

TEST_CASE("backprop matches central differences") {
  CHECK(checks::model_gradient_max_rel_err(7) <= 1e-4);
  CHECK(checks::model_gradient_max_rel_err(1234) <= 1e-4);
}

TEST_CASE("training on a single atom learns the contraction field") {
  const double atom = 2.0;
  PairProvider pairs = [&, rng = Rng(19, streams::kPairProvider)](
                           std::int64_t n, Mat& z0, Mat& z1) mutable {
    z0 = sample_prior(Prior::student_t(1, 10.0), n, rng);
    z1 = Mat::Constant(n, 1, atom);
  };

  MlpVelocity model(1, {128, 128}, 4, 19);
  TrainConfig cfg;
  cfg.steps = 2000;
  cfg.batch_size = 256;
  cfg.learning_rate = 2e-3;
  cfg.seed = 19;
  const TrainReport report = train(model, cfg, pairs);

  const double initial = report.loss_curve.front().second;
  CHECK(report.final_loss < 0.1 * initial);

  Mat atoms(1, 1);
  atoms(0, 0) = atom;
  Vec w(1);
  w << 1.0;
  const FiniteAtomTarget target(atoms, w);
  const OracleVelocity oracle(Prior::student_t(1, 10.0), target);
  const double mse =
      velocity_mse_on_grid(model, oracle, default_probe_grid(target, 0.9));
  CHECK(mse <= 0.05 * (1.0 + atom * atom));
}

TEST_CASE("training determinism and zero steps") {
  auto make_pairs = [](std::uint64_t seed) {
    return PairProvider([rng = Rng(seed, streams::kPairProvider)](
                            std::int64_t n, Mat& z0, Mat& z1) mutable {
      z0 = sample_prior(Prior::student_t(2, 5.0), n, rng);
      z1 = sample_prior(Prior::student_t(2, 5.0), n, rng);
    });
  };

  TrainConfig cfg;
  cfg.steps = 50;
  cfg.batch_size = 16;
  cfg.seed = 4;

  MlpVelocity m1(2, {16, 16}, 2, cfg.seed);
  MlpVelocity m2(2, {16, 16}, 2, cfg.seed);
  auto p1 = make_pairs(4);
  auto p2 = make_pairs(4);
  (void)train(m1, cfg, p1);
  (void)train(m2, cfg, p2);
  CHECK((m1.params() - m2.params()).norm() == 0.0);  // bit-identical

  MlpVelocity m3(2, {16, 16}, 2, cfg.seed);
  const Vec before = m3.params();
  TrainConfig zero = cfg;
  zero.steps = 0;
  auto p3 = make_pairs(4);
  (void)train(m3, zero, p3);
  CHECK((m3.params() - before).norm() == 0.0);
}

TEST_CASE("training aborts on non-finite loss") {
  PairProvider bad = [](std::int64_t n, Mat& z0, Mat& z1) {
    z0 = Mat::Zero(n, 1);
    z1 = Mat::Constant(n, 1, std::numeric_limits<double>::infinity());
  };
  MlpVelocity model(1, {8}, 1, 0);
  TrainConfig cfg;
  cfg.steps = 3;
  cfg.batch_size = 4;
  CHECK_THROWS_WITH_AS((void)train(model, cfg, bad),
                       doctest::Contains("aborted at step"), NumericError);
}

TEST_CASE("checkpoint round trip is bit exact") {
  MlpVelocity model(2, {8, 8}, 3, 21);
  Rng rng(21);
  for (Eigen::Index i = 0; i < model.params().size(); ++i)
    model.params()[i] = rng.normal() * std::pow(10.0, rng.uniform(-8.0, 8.0));

  const std::string path = temp_path("mf_ckpt_test.ckpt");
  model.save_params(path);

  MlpVelocity loaded = MlpVelocity::load(path);
  CHECK(loaded.layer_dims() == model.layer_dims());
  CHECK((loaded.params() - model.params()).norm() == 0.0);

  MlpVelocity same_arch(2, {8, 8}, 3, 99);
  same_arch.load_params(path);
  CHECK((same_arch.params() - model.params()).norm() == 0.0);

  MlpVelocity other_arch(2, {8, 16}, 3, 0);
  CHECK_THROWS_AS(other_arch.load_params(path), FormatError);

  // truncated file
  std::ifstream in(path);
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  const std::string cut = path + ".cut";
  std::ofstream out(cut);
  out << contents.substr(0, contents.size() / 2);
  out.close();
  CHECK_THROWS_AS((void)MlpVelocity::load(cut), FormatError);

  std::remove(path.c_str());
  std::remove(cut.c_str());
}
