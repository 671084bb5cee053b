// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

// Command line for libmirrorflow, built entirely on the C API.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "mirrorflow/mirrorflow.h"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config) {
  auto* c = cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
  if (needs_config) c->required();
  cmd->add_option("--out", opts.out_dir, "output directory (default: config output_dir)");
  cmd->add_option("--seed", opts.seed, "override the config's seed list with one seed");
  cmd->add_flag("--verbose", opts.verbose, "print per-phase progress");
}

int fail(mf_status status) {
  std::fprintf(stderr, "error (%s): %s\n", mf_status_name(status), mf_last_error());
  return 1;
}

int run_phase(const CommonOpts& opts,
              mf_status (*phase)(const mf_config*, const char*, int32_t)) {
  mf_config* config = nullptr;
  mf_status status = mf_config_load(opts.config_path.c_str(), &config);
  if (status != MF_OK) return fail(status);
  if (opts.seed >= 0) mf_config_set_seed(config, static_cast<uint64_t>(opts.seed));
  const char* out = opts.out_dir.empty() ? nullptr : opts.out_dir.c_str();
  status = phase(config, out, opts.verbose ? 1 : 0);
  mf_config_free(config);
  return status == MF_OK ? 0 : fail(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mirror flow matching on convex domains"};
  app.require_subcommand(1);

  CommonOpts train_opts, sample_opts, eval_opts, exp_opts, verify_opts;
  auto* train = app.add_subcommand("train", "fit the dual velocity field per seed");
  add_common(train, train_opts, true);
  auto* sample = app.add_subcommand("sample", "generate feasible samples from trained models");
  add_common(sample, sample_opts, true);
  auto* eval = app.add_subcommand("eval", "evaluate sample files against fresh references");
  add_common(eval, eval_opts, true);
  auto* experiment =
      app.add_subcommand("experiment", "full per-seed pipeline with aggregation");
  add_common(experiment, exp_opts, true);
  auto* verify = app.add_subcommand("verify", "run the library's invariant checks");
  verify->add_flag("--verbose", verify_opts.verbose, "print residuals per check");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return run_phase(train_opts, mf_run_train);
  if (sample->parsed()) return run_phase(sample_opts, mf_run_sample);
  if (eval->parsed()) return run_phase(eval_opts, mf_run_eval);
  if (experiment->parsed()) return run_phase(exp_opts, mf_run_experiment);
  if (verify->parsed()) {
    int32_t failures = 0;
    const mf_status status = mf_run_verify(verify_opts.verbose ? 1 : 0, &failures);
    if (status != MF_OK) return fail(status);
    return failures == 0 ? 0 : 2;
  }
  return 1;
}
