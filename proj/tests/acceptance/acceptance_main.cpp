// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one criterion per section, one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mirrorflow/bench.hpp"
#include "mirrorflow/errors.hpp"
#include "mirrorflow/flow.hpp"
#include "mirrorflow/metrics.hpp"
#include "mirrorflow/oracle.hpp"
#include "mirrorflow/verify.hpp"

using namespace mf;

namespace {

struct Criterion {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "  FAILED: " << what << "\n";
    }
  }
  void note(const std::string& what) { detail << "  " << what << "\n"; }
};

int g_failures = 0;
std::vector<int> g_selected;  // empty means all

bool selected(int index) {
  if (g_selected.empty()) return true;
  for (int s : g_selected)
    if (s == index) return true;
  return false;
}

void run_criterion(int index, const std::string& name,
                   const std::function<void(Criterion&)>& body) {
  if (!selected(index)) return;
  Criterion c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.pass = false;
    c.detail << "  exception: " << e.what() << "\n";
  }
  std::printf("[%s] criterion %d: %s\n", c.pass ? "PASS" : "FAIL", index,
              name.c_str());
  std::fputs(c.detail.str().c_str(), stdout);
  std::fflush(stdout);
  if (!c.pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

MirrorMap preset_map(const std::string& preset) {
  const ExperimentConfig cfg = preset_config(preset);
  return MirrorMap::regularized(cfg.domain.build(), cfg.kappa);
}

FiniteAtomTarget atoms_1d(std::initializer_list<double> values,
                          std::initializer_list<double> weights) {
  Mat a(static_cast<Eigen::Index>(values.size()), 1);
  Vec w(static_cast<Eigen::Index>(weights.size()));
  Eigen::Index i = 0;
  for (double v : values) a(i++, 0) = v;
  i = 0;
  for (double v : weights) w[i++] = v;
  return FiniteAtomTarget(a, w);
}

// ---- criteria ------------------------------------------------------------

void geometry_suite_criterion(Criterion& c) {
  const struct {
    const char* preset;
    std::uint64_t seed;
  } cases[] = {{"polytope2d", 101}, {"polytope10d", 102}, {"ball6d", 103}};
  for (const auto& cs : cases) {
    const MirrorMap map = preset_map(cs.preset);
    const auto stats = checks::geometry_suite(map, 1000, cs.seed);
    c.note(std::string(cs.preset) + ": roundtrip " + fmt(stats.max_roundtrip) +
           ", min eig " + fmt(stats.min_eigenvalue) + ", grad fd " +
           fmt(stats.max_grad_fd_rel) + ", hess fd " + fmt(stats.max_hess_fd_rel));
    c.require(stats.max_roundtrip <= 1e-8,
              std::string(cs.preset) + " conjugate round trip <= 1e-8");
    c.require(stats.min_eigenvalue >= 1.0 - 1e-8,
              std::string(cs.preset) + " hessian min eigenvalue >= 1 - 1e-8");
    c.require(stats.max_grad_fd_rel <= 1e-6,
              std::string(cs.preset) + " gradient finite differences <= 1e-6");
  }
}

void tail_exponent_criterion(Criterion& c) {
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

  const auto reg = dual_tail_exponent(MirrorMap::regularized(cube, 0.5),
                                      uniform_cube, 1000000, 1.0);
  c.note("regularized kappa=0.5: exponent " + fmt(reg.exponent_estimate) +
         " (target 2.0 +- 0.5), r2 " + fmt(reg.r_squared));
  c.require(std::abs(reg.exponent_estimate - 2.0) <= 0.5,
            "kappa=0.5 exponent within 2.0 +- 0.5");

  const auto logb = dual_tail_exponent(MirrorMap::log_barrier(cube),
                                       uniform_cube, 1000000, 1.0);
  c.note("log barrier: exponent " + fmt(logb.exponent_estimate) +
         " (target 1.0 +- 0.4), r2 " + fmt(logb.r_squared));
  c.require(std::abs(logb.exponent_estimate - 1.0) <= 0.4,
            "log-barrier exponent within 1.0 +- 0.4");
}

void oracle_euler_criterion(Criterion& c) {
  double worst = 0.0;
  for (const auto& [atom, h, T] :
       std::vector<std::tuple<double, double, double>>{{1.0, 0.1, 0.9},
                                                       {-2.5, 0.05, 0.8},
                                                       {0.3, 0.25, 0.75},
                                                       {4.0, 0.01, 0.99}}) {
    worst = std::max(worst, checks::single_atom_euler_error(atom, h, T));
  }
  c.note("single-atom euler max error " + fmt(worst));
  c.require(worst <= 1e-12, "single-atom euler exactness <= 1e-12");

  // brute-force posterior for atoms {0,1}, StudentT nu=1, z=0.5, t=0.5
  const double u0 = 0.5 / 0.5, u1 = 0.0 / 0.5;
  const double d0 = 0.5 / (1.0 + u0 * u0), d1 = 0.5 / (1.0 + u1 * u1);
  const double expected = (-0.5 + d1 / (d0 + d1)) / 0.5;
  const OracleVelocity two(Prior::student_t(1, 1.0), atoms_1d({0.0, 1.0}, {0.5, 0.5}));
  Vec z(1);
  z << 0.5;
  const double got = two.velocity(z, 0.5)[0];
  c.note("two-atom v(0.5, 0.5) = " + fmt(got) + " (brute force " + fmt(expected) + ")");
  c.require(std::abs(got - expected) <= 1e-9, "two-atom velocity matches brute force");
  c.require(std::abs(got - 1.0 / 3.0) <= 1e-9, "two-atom velocity equals 1/3");

  Mat a2(2, 2);
  a2 << -2.0, 0.5, 1.0, -1.5;
  Vec w2(2);
  w2 << 0.5, 0.5;
  const OracleVelocity oracle(Prior::student_t(2, 5.0), FiniteAtomTarget(a2, w2));
  Vec z0(2);
  z0 << 0.4, -0.3;
  double res = 0.0;
  res = std::max(res, check_primal_dual_equivalence(
                          MirrorMap::regularized(ConvexDomain::ball(2.0, 2), 0.5),
                          oracle, z0, 0.5, 0.05));
  res = std::max(res, check_primal_dual_equivalence(preset_map("polytope2d"),
                                                    oracle, z0, 0.5, 0.1));
  c.note("primal-dual equivalence max residual " + fmt(res));
  c.require(res <= 1e-4, "primal-dual equivalence residual <= 1e-4");
}

void lipschitz_criterion(Criterion& c) {
  const FiniteAtomTarget single = atoms_1d({2.0}, {1.0});
  const OracleVelocity so(Prior::student_t(1, 10.0), single);
  for (const double T : {0.5, 0.9}) {
    const auto est = estimate_lipschitz(so, T, default_probe_grid(single, T));
    const double rel = std::abs(est.spatial - 1.0 / (1.0 - T)) * (1.0 - T);
    c.note("single atom T=" + fmt(T) + ": spatial " + fmt(est.spatial) +
           ", rel err " + fmt(rel));
    c.require(rel <= 1e-3, "single-atom spatial estimate = 1/(1-T) to 1e-3");
  }

  const FiniteAtomTarget two = atoms_1d({-1.0, 1.0}, {0.5, 0.5});
  const OracleVelocity to(Prior::student_t(1, 3.0), two);
  double base = 0.0;
  for (const double T : {0.5, 0.7, 0.9}) {
    const auto est = estimate_lipschitz(to, T, default_probe_grid(two, T));
    c.require(std::isfinite(est.spatial) && std::isfinite(est.temporal),
              "student-t estimates finite at T=" + fmt(T));
    const double scaled = est.spatial * (1.0 - T) * (1.0 - T);
    c.note("student-t T=" + fmt(T) + ": spatial " + fmt(est.spatial) +
           ", spatial*(1-T)^2 " + fmt(scaled));
    if (T == 0.5)
      base = scaled;
    else
      c.require(scaled <= 3.0 * base, "spatial grows no faster than c/(1-T)^2");
  }

  const auto cfg = far_atom_comparison_config();
  const auto gauss = estimate_lipschitz(OracleVelocity(Prior::gaussian(1), cfg.target),
                                        cfg.T, cfg.grid);
  const auto student = estimate_lipschitz(
      OracleVelocity(Prior::student_t(1, 1.0), cfg.target), cfg.T, cfg.grid);
  c.note("far-atom spatial: gaussian " + fmt(gauss.spatial) + " vs student-t " +
         fmt(student.spatial));
  c.require(gauss.spatial > student.spatial,
            "gaussian-prior estimate exceeds student-t estimate");
}

void model_criterion(Criterion& c) {
  double grad_err = 0.0;
  for (const std::uint64_t seed : {7ull, 1234ull, 99ull})
    grad_err = std::max(grad_err, checks::model_gradient_max_rel_err(seed));
  c.note("backprop max rel err " + fmt(grad_err));
  c.require(grad_err <= 1e-4, "backprop vs finite differences <= 1e-4");

  // bit-exact training determinism
  {
    auto make_pairs = [] {
      return PairProvider([rng = Rng(11, streams::kPairProvider)](
                              std::int64_t n, Mat& z0, Mat& z1) mutable {
        z0 = sample_prior(Prior::student_t(2, 5.0), n, rng);
        z1 = sample_prior(Prior::student_t(2, 5.0), n, rng);
      });
    };
    TrainConfig tc;
    tc.steps = 120;
    tc.batch_size = 32;
    tc.seed = 11;
    MlpVelocity m1(2, {32, 32}, 4, tc.seed), m2(2, {32, 32}, 4, tc.seed);
    auto p1 = make_pairs();
    auto p2 = make_pairs();
    (void)train(m1, tc, p1);
    (void)train(m2, tc, p2);
    const bool identical = (m1.params() - m2.params()).norm() == 0.0;
    c.note(std::string("training determinism: ") +
           (identical ? "bit-exact" : "MISMATCH"));
    c.require(identical, "identical seeds give bit-exact checkpoints");
  }

  // single-atom training quality
  {
    const double atom = 2.0;
    PairProvider pairs = [&, rng = Rng(17, streams::kPairProvider)](
                             std::int64_t n, Mat& z0, Mat& z1) mutable {
      z0 = sample_prior(Prior::student_t(1, 10.0), n, rng);
      z1 = Mat::Constant(n, 1, atom);
    };
    MlpVelocity model(1, {128, 128}, 4, 17);
    TrainConfig tc;
    tc.steps = 6000;
    tc.batch_size = 256;
    tc.learning_rate = 2e-3;
    tc.seed = 17;
    const TrainReport report = train(model, tc, pairs);
    const FiniteAtomTarget target = atoms_1d({atom}, {1.0});
    const OracleVelocity oracle(Prior::student_t(1, 10.0), target);
    const double mse =
        velocity_mse_on_grid(model, oracle, default_probe_grid(target, 0.9));
    const double bound = 0.05 * (1.0 + atom * atom);
    c.note("single-atom probe MSE " + fmt(mse) + " (bound " + fmt(bound) +
           "), loss " + fmt(report.loss_curve.front().second) + " -> " +
           fmt(report.final_loss));
    c.require(report.final_loss < 0.1 * report.loss_curve.front().second,
              "final loss below 10% of initial");
    c.require(mse <= bound, "probe-grid MSE within 0.05*(1+|z*|^2)");
  }
}

void h_scaling_criterion(Criterion& c) {
  const FiniteAtomTarget target = atoms_1d({-1.0, 1.5}, {0.5, 0.5});
  const Prior prior = Prior::student_t(1, 10.0);
  const OracleVelocity oracle(prior, target);
  const double T = 0.8;  // divisible by every h below
  const int n = 512;
  const int replicates = 8;

  const std::vector<double> hs{0.2, 0.1, 0.05};
  std::vector<std::vector<double>> w2s(hs.size());
  for (int rep = 0; rep < replicates; ++rep) {
    const std::uint64_t seed = 900 + static_cast<std::uint64_t>(rep);
    // Common prior draws per seed: the reference transports the same points
    // along a fine grid.
    const SampleBatch ref =
        euler_sample(oracle, SamplerConfig{0.001, T, n, seed}, prior);
    for (std::size_t hi = 0; hi < hs.size(); ++hi) {
      const SampleBatch out =
          euler_sample(oracle, SamplerConfig{hs[hi], T, n, seed}, prior);
      w2s[hi].push_back(w2_exact(out.data, ref.data));
    }
  }

  std::vector<Aggregate> agg;
  for (std::size_t hi = 0; hi < hs.size(); ++hi) {
    agg.push_back(aggregate_values(w2s[hi]));
    c.note("h=" + fmt(hs[hi]) + ": W2 to fine grid " + fmt(agg.back().mean) +
           " +- " + fmt(agg.back().std));
  }
  for (std::size_t hi = 1; hi < hs.size(); ++hi) {
    const double slack = 2.0 * std::max(agg[hi].std, agg[hi - 1].std);
    c.require(agg[hi].mean <= agg[hi - 1].mean + slack,
              "W2 non-increasing from h=" + fmt(hs[hi - 1]) + " to h=" + fmt(hs[hi]));
  }
}

void early_stopping_criterion(Criterion& c) {
  const FiniteAtomTarget target = atoms_1d({-1.0, 1.5}, {0.5, 0.5});
  const Prior prior = Prior::student_t(1, 10.0);
  const OracleVelocity oracle(prior, target);
  const int n = 512;
  const int replicates = 8;

  const double m2 = target.second_moment() + prior.second_moment();
  for (const double T : {0.8, 0.9, 0.95}) {
    const double bound = (1.0 - T) * std::sqrt(2.0 * m2);
    std::vector<double> w2s;
    for (int rep = 0; rep < replicates; ++rep) {
      const std::uint64_t seed = 7000 + static_cast<std::uint64_t>(rep);
      const SampleBatch out =
          euler_sample(oracle, SamplerConfig{0.01, T, n, seed}, prior);
      const Mat tgt = sample_atoms(target, n, derive_seed(seed, streams::kEval));
      w2s.push_back(w2_exact(out.data, tgt));
    }
    const Aggregate agg = aggregate_values(w2s);
    c.note("T=" + fmt(T) + ": W2(output, target) " + fmt(agg.mean) + " +- " +
           fmt(agg.std) + ", bound term " + fmt(bound));
    c.require(agg.mean <= bound + 2.0 * agg.std,
              "W2 within the early-stopping bound at T=" + fmt(T));
  }
}

Vec nearest_mean_fractions(const Mat& samples,
                           const TruncatedMixtureTarget& target) {
  Vec occ = Vec::Zero(static_cast<Eigen::Index>(target.components().size()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < target.components().size(); ++k) {
      const double d =
          (samples.row(i).transpose() - target.components()[k].mean).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    occ[best] += 1.0 / static_cast<double>(samples.rows());
  }
  return occ;
}

void end_to_end_2d_criterion(Criterion& c) {
  nlohmann::json j;
  j["preset"] = "polytope2d";
  j["train"] = {{"steps", 8000}, {"batch_size", 256}, {"n_train", 20000}};
  j["sampler"] = {{"n", 5000}};
  j["eval"] = {{"n_reference", 5000}};
  j["seeds"] = {0};
  const ExperimentConfig cfg = parse_config_json(j);
  const ExperimentReport report = run_experiment(cfg, false, false);
  const SeedResult& r = report.seeds.at(0);
  c.require(!r.failed, "experiment seed completed: " + r.error);
  if (r.failed) return;

  c.note("feasibility " + fmt(r.metrics.feasibility));
  c.require(r.metrics.feasibility == 1.0, "feasibility exactly 100%");

  for (int k = 0; k < 3; ++k) {
    const double diff = std::abs((*r.occupancy)[k] - (*r.occupancy_expected)[k]);
    c.note("mode " + std::to_string(k) + ": occupancy " + fmt((*r.occupancy)[k]) +
           " vs renormalized " + fmt((*r.occupancy_expected)[k]));
    c.require(diff <= 0.10, "occupancy within 0.10 for mode " + std::to_string(k));
  }

  // self-calibrated MMD threshold from two independent ground-truth draws
  const ConvexDomain domain = cfg.domain.build();
  const TruncatedMixtureTarget target = cfg.target.build(domain);
  const Mat ref = sample_truncated_mixture(target, cfg.eval.n_reference,
                                           derive_seed(0, streams::kReference));
  const Mat ref2 = sample_truncated_mixture(target, cfg.eval.n_reference,
                                            derive_seed(0, streams::kReferenceB));
  const double self_mmd = mmd_squared(ref, ref2, r.metrics.kernel_bandwidth);
  c.note("MMD2(gen, ref) " + fmt(r.metrics.mmd_squared) + " vs 5 x MMD2(ref, ref') " +
         fmt(5.0 * self_mmd));
  c.require(r.metrics.mmd_squared <= 5.0 * self_mmd,
            "MMD2 within 5x the reference-vs-reference level");

  // Context when the thresholds are out of reach at this schedule: the same
  // measurements for the exact oracle velocity of an empirical dual measure
  // (no learning error) at the pinned (h, T), and for the trained field on a
  // fine schedule. Informational only.
  const MirrorMap map = MirrorMap::regularized(domain, cfg.kappa);
  const Prior prior = Prior::student_t(2, cfg.nu);
  {
    const Mat data = sample_truncated_mixture(target, 5000,
                                              derive_seed(42, streams::kTrainData));
    Mat dual(data.rows(), 2);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      dual.row(i) = map.gradient(data.row(i).transpose()).transpose();
    const OracleVelocity oracle(
        prior, FiniteAtomTarget(dual, Vec::Constant(dual.rows(),
                                                    1.0 / static_cast<double>(dual.rows()))));
    const SampleBatch floor_out =
        mirror_sample(map, oracle, SamplerConfig{cfg.h, cfg.T, 5000, 7}, prior);
    const double floor_mmd = mmd_squared(floor_out.data, ref, r.metrics.kernel_bandwidth);
    const Vec occ = nearest_mean_fractions(floor_out.data, target);
    c.note("context: exact-velocity floor at h=" + fmt(cfg.h) + ", T=" + fmt(cfg.T) +
           ": MMD2 " + fmt(floor_mmd) + " (" + fmt(floor_mmd / self_mmd) +
           "x self), occupancy (" + fmt(occ[0]) + ", " + fmt(occ[1]) + ", " +
           fmt(occ[2]) + ")");
  }
  {
    run_train_phase(cfg, "/tmp/mf_acceptance_c8", false);
    const MlpVelocity model = MlpVelocity::load("/tmp/mf_acceptance_c8/model_seed0.ckpt");
    const SampleBatch fine =
        mirror_sample(map, model, SamplerConfig{0.01, 0.99, 5000, 0}, prior);
    const double fine_mmd = mmd_squared(fine.data, ref, r.metrics.kernel_bandwidth);
    const Vec occ = nearest_mean_fractions(fine.data, target);
    c.note("context: trained field at h=0.01, T=0.99: MMD2 " + fmt(fine_mmd) + " (" +
           fmt(fine_mmd / self_mmd) + "x self), occupancy (" + fmt(occ[0]) + ", " +
           fmt(occ[1]) + ", " + fmt(occ[2]) + "), feasibility " +
           fmt(feasibility_rate(domain, fine.data)));
  }
}

void ordering_criterion(Criterion& c) {
  for (const std::string preset : {"polytope10d", "ball6d"}) {
    nlohmann::json j;
    j["preset"] = preset;
    j["train"] = {{"steps", 12000}, {"batch_size", 256}, {"n_train", 20000}};
    j["sampler"] = {{"n", 4000}};
    j["eval"] = {{"n_reference", 4000}};
    j["seeds"] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

    nlohmann::json jt = j;
    jt["prior"] = {{"kind", "student_t"}, {"nu", 10.0}};
    const ExperimentReport t_flow = run_experiment(parse_config_json(jt), false, false);

    nlohmann::json jg = j;
    jg["prior"] = {{"kind", "gaussian"}};
    const ExperimentReport g_flow = run_experiment(parse_config_json(jg), false, false);

    for (const auto* rep : {&t_flow, &g_flow})
      for (const auto& r : rep->seeds)
        c.require(!r.failed, preset + " seed " + std::to_string(r.seed) +
                                 " completed: " + r.error);

    c.note(preset + ": t-flow MMD2 " + fmt(t_flow.mmd_squared.mean) + " +- " +
           fmt(t_flow.mmd_squared.std) + ", G-flow MMD2 " +
           fmt(g_flow.mmd_squared.mean) + " +- " + fmt(g_flow.mmd_squared.std));
    c.note(preset + ": t-flow KL " + fmt(t_flow.kl.mean) + " +- " +
           fmt(t_flow.kl.std) + ", G-flow KL " + fmt(g_flow.kl.mean) + " +- " +
           fmt(g_flow.kl.std));
    c.require(t_flow.mmd_squared.mean <= g_flow.mmd_squared.mean,
              preset + ": mean MMD2 of mirror t-flow <= mirror G-flow");
    c.require(t_flow.kl.mean <= g_flow.kl.mean,
              preset + ": mean KL of mirror t-flow <= mirror G-flow");
    c.require(t_flow.feasibility.mean == 1.0, preset + ": t-flow feasibility 100%");
    c.require(g_flow.feasibility.mean == 1.0, preset + ": G-flow feasibility 100%");
  }
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) g_selected.push_back(std::atoi(argv[i]));
  std::printf("mirrorflow acceptance suite\n");

  run_criterion(1, "geometry suite (round trip, hessian bound, derivatives)",
                geometry_suite_criterion);
  run_criterion(2, "dual tail exponents (regularized 2.0, log barrier 1.0)",
                tail_exponent_criterion);
  run_criterion(3, "oracle and euler exactness, primal-dual equivalence",
                oracle_euler_criterion);
  run_criterion(4, "velocity lipschitz estimates and prior comparison",
                lipschitz_criterion);
  run_criterion(5, "model gradients, determinism, single-atom training",
                model_criterion);
  run_criterion(6, "euler W2 error non-increasing in h", h_scaling_criterion);
  run_criterion(7, "early-stopping W2 bound", early_stopping_criterion);
  run_criterion(8, "2D end-to-end quality (feasibility, occupancy, MMD)",
                end_to_end_2d_criterion);
  run_criterion(9, "mirror t-flow vs G-flow ordering on 10D polytope and 6D ball",
                ordering_criterion);

  // Image-scale watermarking experiments need GPU training budgets and
  // pretrained checkpoints; nothing here depends on them.
  std::printf("[SKIP] criterion 10: image-scale watermarking excluded by design\n");

  std::printf("%s: %d criterion failure(s)\n", g_failures == 0 ? "OK" : "FAILED",
              g_failures);
  return g_failures;
}
