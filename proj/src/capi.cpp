// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#include "mirrorflow/mirrorflow.h"

#include <cstdio>
#include <cstring>
#include <string>

#include "mirrorflow/bench.hpp"
#include "mirrorflow/errors.hpp"
#include "mirrorflow/flow.hpp"
#include "mirrorflow/metrics.hpp"
#include "mirrorflow/model.hpp"
#include "mirrorflow/prior.hpp"

using namespace mf;

struct mf_domain {
  ConvexDomain impl;
};
struct mf_map {
  MirrorMap impl;
};
struct mf_model {
  MlpVelocity impl;
};
struct mf_config {
  ExperimentConfig impl;
};

namespace {

thread_local std::string g_last_error;

mf_status classify(const std::exception& e) {
  if (dynamic_cast<const DimensionError*>(&e)) return MF_ERROR_DIMENSION;
  if (dynamic_cast<const FeasibilityError*>(&e)) return MF_ERROR_INFEASIBLE;
  if (dynamic_cast<const NumericError*>(&e)) return MF_ERROR_NUMERIC;
  if (dynamic_cast<const FormatError*>(&e)) return MF_ERROR_FORMAT;
  if (dynamic_cast<const StatsError*>(&e)) return MF_ERROR_STATS;
  if (dynamic_cast<const SamplingError*>(&e)) return MF_ERROR_SAMPLING;
  if (dynamic_cast<const ConfigError*>(&e)) return MF_ERROR_CONFIG;
  if (dynamic_cast<const PreconditionError*>(&e)) return MF_ERROR_PRECONDITION;
  if (dynamic_cast<const Error*>(&e)) return MF_ERROR_INTERNAL;
  return MF_ERROR_INTERNAL;
}

template <typename F>
mf_status wrap(F&& f) noexcept {
  try {
    f();
    g_last_error.clear();
    return MF_OK;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return classify(e);
  } catch (...) {
    g_last_error = "unknown error";
    return MF_ERROR_INTERNAL;
  }
}

mf_status invalid(const char* message) {
  g_last_error = message;
  return MF_ERROR_INVALID_ARGUMENT;
}

Vec copy_vec(const double* x, int n) {
  Vec v(n);
  std::memcpy(v.data(), x, sizeof(double) * static_cast<std::size_t>(n));
  return v;
}

Mat map_matrix(const double* data, int64_t n, int32_t dim) {
  Mat m(n, dim);
  for (int64_t i = 0; i < n; ++i)
    for (int32_t j = 0; j < dim; ++j) m(i, j) = data[static_cast<std::size_t>(i) * dim + j];
  return m;
}

std::string resolve_out(const mf_config* config, const char* out_dir);

}  // namespace

extern "C" {

const char* mf_version(void) { return "0.1.0"; }

const char* mf_last_error(void) { return g_last_error.c_str(); }

const char* mf_status_name(mf_status status) {
  switch (status) {
    case MF_OK: return "ok";
    case MF_ERROR_INVALID_ARGUMENT: return "invalid argument";
    case MF_ERROR_DIMENSION: return "dimension mismatch";
    case MF_ERROR_INFEASIBLE: return "infeasible point";
    case MF_ERROR_NUMERIC: return "numeric error";
    case MF_ERROR_FORMAT: return "format error";
    case MF_ERROR_STATS: return "degenerate statistics";
    case MF_ERROR_SAMPLING: return "sampling starved";
    case MF_ERROR_CONFIG: return "bad configuration";
    case MF_ERROR_PRECONDITION: return "precondition violated";
    case MF_ERROR_IO: return "io error";
    case MF_ERROR_INTERNAL: return "internal error";
  }
  return "unknown";
}

mf_status mf_domain_create_polytope(int32_t dim, int32_t rows, const double* A,
                                    const double* b, mf_domain** out) {
  if (!A || !b || !out || dim < 1 || rows < 1) return invalid("bad polytope arguments");
  return wrap([&] {
    Mat Am(rows, dim);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < dim; ++j) Am(i, j) = A[static_cast<std::size_t>(i) * dim + j];
    *out = new mf_domain{ConvexDomain::polytope(std::move(Am), copy_vec(b, rows))};
  });
}

mf_status mf_domain_create_ball(int32_t dim, double radius, mf_domain** out) {
  if (!out) return invalid("bad ball arguments");
  return wrap([&] { *out = new mf_domain{ConvexDomain::ball(radius, dim)}; });
}

mf_status mf_domain_generate_polytope(int32_t dim, int32_t rows, uint64_t seed,
                                      mf_domain** out) {
  if (!out) return invalid("bad arguments");
  return wrap([&] { *out = new mf_domain{generate_random_polytope(dim, rows, seed)}; });
}

void mf_domain_free(mf_domain* domain) { delete domain; }

mf_status mf_domain_dim(const mf_domain* domain, int32_t* out) {
  if (!domain || !out) return invalid("null argument");
  *out = domain->impl.dim();
  return MF_OK;
}

mf_status mf_domain_num_barriers(const mf_domain* domain, int32_t* out) {
  if (!domain || !out) return invalid("null argument");
  *out = domain->impl.num_barriers();
  return MF_OK;
}

mf_status mf_domain_barrier_values(const mf_domain* domain, const double* x,
                                   double* out) {
  if (!domain || !x || !out) return invalid("null argument");
  return wrap([&] {
    const Vec phi = domain->impl.barrier_values(copy_vec(x, domain->impl.dim()));
    std::memcpy(out, phi.data(), sizeof(double) * static_cast<std::size_t>(phi.size()));
  });
}

mf_status mf_domain_contains(const mf_domain* domain, const double* x,
                             int32_t* out) {
  if (!domain || !x || !out) return invalid("null argument");
  return wrap([&] {
    *out = domain->impl.contains(copy_vec(x, domain->impl.dim())) ? 1 : 0;
  });
}

mf_status mf_domain_interior_point(const mf_domain* domain, double* out) {
  if (!domain || !out) return invalid("null argument");
  const Vec& p = domain->impl.interior_point();
  std::memcpy(out, p.data(), sizeof(double) * static_cast<std::size_t>(p.size()));
  return MF_OK;
}

mf_status mf_map_create_regularized(const mf_domain* domain, double kappa,
                                    mf_map** out) {
  if (!domain || !out) return invalid("null argument");
  return wrap([&] { *out = new mf_map{MirrorMap::regularized(domain->impl, kappa)}; });
}

mf_status mf_map_create_log_barrier(const mf_domain* domain, mf_map** out) {
  if (!domain || !out) return invalid("null argument");
  return wrap([&] { *out = new mf_map{MirrorMap::log_barrier(domain->impl)}; });
}

void mf_map_free(mf_map* map) { delete map; }

mf_status mf_map_gradient(const mf_map* map, const double* x, double* z) {
  if (!map || !x || !z) return invalid("null argument");
  return wrap([&] {
    const int d = map->impl.domain().dim();
    const Vec g = map->impl.gradient(copy_vec(x, d));
    std::memcpy(z, g.data(), sizeof(double) * static_cast<std::size_t>(d));
  });
}

mf_status mf_map_hessian(const mf_map* map, const double* x, double* h) {
  if (!map || !x || !h) return invalid("null argument");
  return wrap([&] {
    const int d = map->impl.domain().dim();
    const Mat H = map->impl.hessian(copy_vec(x, d));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) h[static_cast<std::size_t>(i) * d + j] = H(i, j);
  });
}

mf_status mf_map_inverse_gradient(const mf_map* map, const double* z, double* x) {
  if (!map || !z || !x) return invalid("null argument");
  return wrap([&] {
    const int d = map->impl.domain().dim();
    const Vec p = map->impl.inverse_gradient(copy_vec(z, d));
    std::memcpy(x, p.data(), sizeof(double) * static_cast<std::size_t>(d));
  });
}

mf_status mf_sample_student_t(int32_t dim, double nu, int64_t n, uint64_t seed,
                              double* out) {
  if (!out) return invalid("null argument");
  return wrap([&] {
    const Mat s = sample_student_t(StudentTPrior(dim, nu), n, seed);
    for (int64_t i = 0; i < n; ++i)
      for (int32_t j = 0; j < dim; ++j)
        out[static_cast<std::size_t>(i) * dim + j] = s(i, j);
  });
}

mf_status mf_model_load(const char* path, mf_model** out) {
  if (!path || !out) return invalid("null argument");
  return wrap([&] { *out = new mf_model{MlpVelocity::load(path)}; });
}

mf_status mf_model_save(const mf_model* model, const char* path) {
  if (!model || !path) return invalid("null argument");
  return wrap([&] { model->impl.save_params(path); });
}

void mf_model_free(mf_model* model) { delete model; }

mf_status mf_model_dim(const mf_model* model, int32_t* out) {
  if (!model || !out) return invalid("null argument");
  *out = model->impl.dim();
  return MF_OK;
}

mf_status mf_model_forward(const mf_model* model, const double* z, double t,
                           double* out) {
  if (!model || !z || !out) return invalid("null argument");
  return wrap([&] {
    const Vec v = model->impl.forward(copy_vec(z, model->impl.dim()), t);
    std::memcpy(out, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
  });
}

mf_status mf_metric_mmd2(const double* X, int64_t n, const double* Y, int64_t m,
                         int32_t dim, double bandwidth, double* out,
                         double* bandwidth_used) {
  if (!X || !Y || !out) return invalid("null argument");
  return wrap([&] {
    std::optional<double> bw;
    if (bandwidth > 0.0) bw = bandwidth;
    *out = mmd_squared(map_matrix(X, n, dim), map_matrix(Y, m, dim), bw,
                       bandwidth_used);
  });
}

mf_status mf_metric_kl_knn(const double* P, int64_t n, const double* Q, int64_t m,
                           int32_t dim, int32_t k, double* out) {
  if (!P || !Q || !out) return invalid("null argument");
  return wrap([&] { *out = kl_knn(map_matrix(P, n, dim), map_matrix(Q, m, dim), k); });
}

mf_status mf_metric_w2(const double* X, const double* Y, int64_t n, int32_t dim,
                       double* out) {
  if (!X || !Y || !out) return invalid("null argument");
  return wrap([&] { *out = w2_exact(map_matrix(X, n, dim), map_matrix(Y, n, dim)); });
}

mf_status mf_metric_feasibility(const mf_domain* domain, const double* X,
                                int64_t n, double* out) {
  if (!domain || !X || !out) return invalid("null argument");
  return wrap([&] {
    *out = feasibility_rate(domain->impl, map_matrix(X, n, domain->impl.dim()));
  });
}

mf_status mf_config_load(const char* path, mf_config** out) {
  if (!path || !out) return invalid("null argument");
  return wrap([&] { *out = new mf_config{parse_config(path)}; });
}

mf_status mf_config_load_string(const char* json_text, mf_config** out) {
  if (!json_text || !out) return invalid("null argument");
  return wrap([&] {
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: invalid JSON text");
    *out = new mf_config{parse_config_json(j)};
  });
}

mf_status mf_config_preset(const char* name, mf_config** out) {
  if (!name || !out) return invalid("null argument");
  return wrap([&] { *out = new mf_config{preset_config(name)}; });
}

void mf_config_free(mf_config* config) { delete config; }

mf_status mf_config_set_seed(mf_config* config, uint64_t seed) {
  if (!config) return invalid("null argument");
  config->impl.seeds = {seed};
  return MF_OK;
}

mf_status mf_config_output_dir(const mf_config* config, char* buf, int64_t bufsize) {
  if (!config || !buf || bufsize < 1) return invalid("null argument");
  const std::string& dir = config->impl.output_dir;
  if (static_cast<int64_t>(dir.size()) + 1 > bufsize)
    return invalid("buffer too small");
  std::memcpy(buf, dir.c_str(), dir.size() + 1);
  return MF_OK;
}

mf_status mf_run_train(const mf_config* config, const char* out_dir,
                       int32_t verbose) {
  if (!config) return invalid("null argument");
  return wrap([&] {
    run_train_phase(config->impl, resolve_out(config, out_dir), verbose != 0);
  });
}

mf_status mf_run_sample(const mf_config* config, const char* out_dir,
                        int32_t verbose) {
  if (!config) return invalid("null argument");
  return wrap([&] {
    run_sample_phase(config->impl, resolve_out(config, out_dir), verbose != 0);
  });
}

mf_status mf_run_eval(const mf_config* config, const char* out_dir,
                      int32_t verbose) {
  if (!config) return invalid("null argument");
  return wrap([&] {
    run_eval_phase(config->impl, resolve_out(config, out_dir), verbose != 0);
  });
}

mf_status mf_run_experiment(const mf_config* config, const char* out_dir,
                            int32_t verbose) {
  if (!config) return invalid("null argument");
  return wrap([&] {
    ExperimentConfig cfg = config->impl;
    if (out_dir && *out_dir) cfg.output_dir = out_dir;
    run_experiment(cfg, verbose != 0, true);
  });
}

mf_status mf_run_verify(int32_t verbose, int32_t* failures) {
  return wrap([&] {
    const auto results = run_verify(verbose != 0);
    int32_t failed = 0;
    for (const auto& check : results) {
      if (!check.pass) ++failed;
      if (verbose || !check.pass)
        std::printf("[%s] %s (%s)\n", check.pass ? "PASS" : "FAIL",
                    check.name.c_str(), check.detail.c_str());
      else
        std::printf("[PASS] %s\n", check.name.c_str());
    }
    std::printf("%d/%zu checks passed\n",
                static_cast<int>(results.size()) - failed, results.size());
    if (failures) *failures = failed;
  });
}

}  // extern "C"

namespace {

std::string resolve_out(const mf_config* config, const char* out_dir) {
  return out_dir && *out_dir ? std::string(out_dir) : config->impl.output_dir;
}

}  // namespace
