// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#include "mirrorflow/bench.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mirrorflow/errors.hpp"
#include "mirrorflow/metrics.hpp"

namespace mf {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + ctx);
  }
}

Vec to_vec(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw ConfigError("config: " + ctx + " must be an array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("config: " + ctx + " must be numeric");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

ConvexDomain generate_random_polytope(int d, int m, std::uint64_t seed) {
  if (m < d + 1)
    throw PreconditionError("generate_random_polytope: need m >= d+1 rows");
  Rng rng(seed, streams::kDomainGen);
  const int ray_checks = 1000000;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Mat A(m, d);
    Vec b(m);
    for (int i = 0; i < m; ++i) {
      A.row(i) = rng.unit_vector(d).transpose();
      b[i] = rng.uniform(3.0, 8.0);
    }
    // Bounded iff every ray from the interior eventually violates some row.
    bool bounded = true;
    for (int r = 0; r < ray_checks && bounded; ++r) {
      const Vec ray = rng.unit_vector(d);
      bool exits = false;
      for (int i = 0; i < m; ++i) {
        if (A.row(i).dot(ray) > 0.0) {
          exits = true;
          break;
        }
      }
      bounded = exits;
    }
    if (bounded) return ConvexDomain::polytope(std::move(A), std::move(b));
  }
  throw Error("generate_random_polytope: no bounded draw within 100 attempts");
}

ConvexDomain DomainSpec::build() const {
  switch (kind) {
    case Kind::Polytope:
      return ConvexDomain::polytope(A, b);
    case Kind::Ball:
      return ConvexDomain::ball(radius, dim);
    case Kind::Generated:
      return generate_random_polytope(dim, rows, seed);
  }
  throw ConfigError("domain: unknown kind");
}

json DomainSpec::to_json() const {
  json j;
  switch (kind) {
    case Kind::Polytope: {
      j["kind"] = "polytope";
      json rows_json = json::array();
      for (Eigen::Index i = 0; i < A.rows(); ++i)
        rows_json.push_back(vec_to_json(A.row(i).transpose()));
      j["A"] = rows_json;
      j["b"] = vec_to_json(b);
      break;
    }
    case Kind::Ball:
      j["kind"] = "ball";
      j["radius"] = radius;
      j["dim"] = dim;
      break;
    case Kind::Generated:
      j["kind"] = "generated";
      j["dim"] = dim;
      j["rows"] = rows;
      j["seed"] = seed;
      break;
  }
  return j;
}

namespace {

// Alternating +-3 mean patterns: +-(-3,-3,3,3,...) and +-(-3,3,-3,...).
std::vector<Vec> pattern_means(int d, int n_patterns) {
  if (n_patterns < 0 || n_patterns > 4)
    throw ConfigError("target: n_patterns must lie in [0,4]");
  std::vector<Vec> out;
  for (int p = 0; p < n_patterns; ++p) {
    const int block = (p / 2 == 0) ? 2 : 1;
    const double flip = (p % 2 == 0) ? 1.0 : -1.0;
    Vec mean(d);
    for (int j = 0; j < d; ++j)
      mean[j] = flip * (((j / block) % 2 == 0) ? -3.0 : 3.0);
    out.push_back(std::move(mean));
  }
  return out;
}

}  // namespace

TruncatedMixtureTarget TargetSpec::build(const ConvexDomain& domain) const {
  if (kind == Kind::Mixture)
    return TruncatedMixtureTarget(components, domain);

  const int d = domain.dim();
  std::vector<TruncatedMixtureTarget::Component> comps;
  for (Vec& mean : pattern_means(d, n_patterns))
    comps.push_back({std::move(mean), Vec::Constant(d, variance), 0.0});

  // Random means: uniform over the domain (box rejection), kept at barrier
  // margin >= 1. Balls use their bounding box so the means spread over the
  // whole body; polytopes use a fixed box matched to the generator's [3, 8]
  // offsets, whose bounding box is far larger than the body in high d.
  const double half_width =
      domain.kind() == ConvexDomain::Kind::Ball ? domain.radius() : 5.0;
  Rng rng(seed, streams::kTargetGen);
  for (int r = 0; r < n_random; ++r) {
    Vec cand(d);
    bool placed = false;
    for (int attempt = 0; attempt < 100000; ++attempt) {
      for (int j = 0; j < d; ++j) cand[j] = rng.uniform(-half_width, half_width);
      if (domain.barrier_values(cand).maxCoeff() <= -1.0) {
        placed = true;
        break;
      }
    }
    if (!placed)
      throw SamplingError("target: could not place a random mean with margin 1");
    comps.push_back({cand, Vec::Constant(d, variance), 0.0});
  }
  if (comps.empty()) throw ConfigError("target: generated mixture has no components");
  for (auto& c : comps) c.weight = 1.0 / static_cast<double>(comps.size());
  return TruncatedMixtureTarget(std::move(comps), domain);
}

json TargetSpec::to_json() const {
  json j;
  if (kind == Kind::Mixture) {
    j["kind"] = "mixture";
    json comps = json::array();
    for (const auto& c : components) {
      json cj;
      cj["mean"] = vec_to_json(c.mean);
      cj["diag_cov"] = vec_to_json(c.diag_cov);
      cj["weight"] = c.weight;
      comps.push_back(cj);
    }
    j["components"] = comps;
  } else {
    j["kind"] = "generated";
    j["n_random"] = n_random;
    j["n_patterns"] = n_patterns;
    j["variance"] = variance;
    j["seed"] = seed;
  }
  return j;
}

// Default seed of the polytope10d stand-in; chosen so the generated domain is
// bounded and all four +-3 pattern means are interior with margin >= 1.
constexpr std::uint64_t kPolytope10dSeed = 0;

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.preset = name;
  if (name == "polytope2d") {
    Mat A(5, 2);
    A << 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -5.0, 1.0, -1.0 / 3.0, 1.0;
    Vec b(5);
    b << 10.0, 30.0, 1.0, 90.0, 5.0;
    cfg.domain.kind = DomainSpec::Kind::Polytope;
    cfg.domain.A = std::move(A);
    cfg.domain.b = std::move(b);
    cfg.domain.dim = 2;

    cfg.target.kind = TargetSpec::Kind::Mixture;
    auto comp = [](std::initializer_list<double> mean,
                   std::initializer_list<double> var, double w) {
      TruncatedMixtureTarget::Component c;
      c.mean = Vec(2);
      c.diag_cov = Vec(2);
      int i = 0;
      for (double v : mean) c.mean[i++] = v;
      i = 0;
      for (double v : var) c.diag_cov[i++] = v;
      c.weight = w;
      return c;
    };
    cfg.target.components = {comp({-10.0, 0.0}, {8.0, 2.0}, 0.6),
                             comp({-15.0, -10.0}, {1.0, 1.0}, 0.2),
                             comp({3.0, 3.0}, {0.5, 0.25}, 0.2)};
    cfg.kappa = 0.5;
    cfg.eval.mode_occupancy = true;
  } else if (name == "polytope10d") {
    cfg.domain.kind = DomainSpec::Kind::Generated;
    cfg.domain.dim = 10;
    cfg.domain.rows = 30;
    cfg.domain.seed = kPolytope10dSeed;
    cfg.target.kind = TargetSpec::Kind::Generated;
    cfg.kappa = 0.3;
  } else if (name == "ball6d") {
    cfg.domain.kind = DomainSpec::Kind::Ball;
    cfg.domain.radius = 12.0;
    cfg.domain.dim = 6;
    cfg.target.kind = TargetSpec::Kind::Generated;
    cfg.kappa = 0.3;
  } else {
    throw ConfigError("config: unknown preset '" + name + "'");
  }
  return cfg;
}

namespace {

void apply_domain(const json& j, DomainSpec& spec) {
  check_keys(j, {"kind", "A", "b", "radius", "dim", "rows", "seed"}, "domain");
  const std::string kind = j.value("kind", "");
  if (kind == "polytope") {
    spec.kind = DomainSpec::Kind::Polytope;
    if (!j.contains("A") || !j.contains("b"))
      throw ConfigError("config: polytope domain needs A and b");
    const json& rows = j["A"];
    if (!rows.is_array() || rows.empty())
      throw ConfigError("config: domain A must be a nonempty array of rows");
    const auto m = static_cast<Eigen::Index>(rows.size());
    Vec first = to_vec(rows[0], "domain.A row");
    Mat A(m, first.size());
    A.row(0) = first.transpose();
    for (Eigen::Index i = 1; i < m; ++i) {
      Vec r = to_vec(rows[static_cast<std::size_t>(i)], "domain.A row");
      if (r.size() != first.size())
        throw ConfigError("config: ragged rows in domain.A");
      A.row(i) = r.transpose();
    }
    spec.A = std::move(A);
    spec.b = to_vec(j["b"], "domain.b");
    spec.dim = static_cast<int>(first.size());
  } else if (kind == "ball") {
    spec.kind = DomainSpec::Kind::Ball;
    if (!j.contains("radius") || !j.contains("dim"))
      throw ConfigError("config: ball domain needs radius and dim");
    spec.radius = j["radius"].get<double>();
    spec.dim = j["dim"].get<int>();
  } else if (kind == "generated") {
    spec.kind = DomainSpec::Kind::Generated;
    if (j.contains("dim")) spec.dim = j["dim"].get<int>();
    if (j.contains("rows")) spec.rows = j["rows"].get<int>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    if (spec.dim < 1 || spec.rows < 1)
      throw ConfigError("config: generated domain needs dim and rows");
  } else {
    throw ConfigError("config: domain.kind must be polytope, ball or generated");
  }
}

void apply_target(const json& j, TargetSpec& spec) {
  check_keys(j, {"kind", "components", "n_random", "n_patterns", "variance", "seed"},
             "target");
  const std::string kind = j.value("kind", "mixture");
  if (kind == "mixture") {
    spec.kind = TargetSpec::Kind::Mixture;
    if (!j.contains("components"))
      throw ConfigError("config: mixture target needs components");
    spec.components.clear();
    for (const json& cj : j["components"]) {
      check_keys(cj, {"mean", "diag_cov", "weight"}, "target component");
      TruncatedMixtureTarget::Component c;
      c.mean = to_vec(cj.at("mean"), "component mean");
      c.diag_cov = to_vec(cj.at("diag_cov"), "component diag_cov");
      c.weight = cj.at("weight").get<double>();
      spec.components.push_back(std::move(c));
    }
  } else if (kind == "generated") {
    spec.kind = TargetSpec::Kind::Generated;
    if (j.contains("n_random")) spec.n_random = j["n_random"].get<int>();
    if (j.contains("n_patterns")) spec.n_patterns = j["n_patterns"].get<int>();
    if (j.contains("variance")) spec.variance = j["variance"].get<double>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  } else {
    throw ConfigError("config: target.kind must be mixture or generated");
  }
}

}  // namespace

ExperimentConfig parse_config_json(const json& j) {
  check_keys(j,
             {"preset", "domain", "target", "map", "prior", "train", "sampler",
              "eval", "seeds", "output_dir"},
             "top level");

  ExperimentConfig cfg;
  bool have_domain = false, have_target = false;
  if (j.contains("preset")) {
    cfg = preset_config(j["preset"].get<std::string>());
    have_domain = have_target = true;
  }

  if (j.contains("domain")) {
    apply_domain(j["domain"], cfg.domain);
    have_domain = true;
  }
  if (j.contains("target")) {
    apply_target(j["target"], cfg.target);
    have_target = true;
  }
  if (!have_domain) throw ConfigError("config: no domain given and no preset");
  if (!have_target) throw ConfigError("config: no target given and no preset");

  if (j.contains("map")) {
    const json& m = j["map"];
    check_keys(m, {"variant", "kappa"}, "map");
    if (m.contains("variant")) {
      const std::string v = m["variant"].get<std::string>();
      if (v == "regularized")
        cfg.map_variant = MirrorMap::Variant::Regularized;
      else if (v == "log_barrier")
        cfg.map_variant = MirrorMap::Variant::LogBarrier;
      else
        throw ConfigError("config: map.variant must be regularized or log_barrier");
    }
    if (m.contains("kappa")) cfg.kappa = m["kappa"].get<double>();
  }
  if (cfg.map_variant == MirrorMap::Variant::Regularized &&
      !(cfg.kappa > 0.0 && cfg.kappa < 1.0))
    throw ConfigError("config: kappa must lie in (0,1)");

  if (j.contains("prior")) {
    const json& p = j["prior"];
    check_keys(p, {"kind", "nu"}, "prior");
    if (p.contains("kind")) {
      const std::string k = p["kind"].get<std::string>();
      if (k == "student_t")
        cfg.prior_kind = PriorKind::StudentT;
      else if (k == "gaussian")
        cfg.prior_kind = PriorKind::Gaussian;
      else
        throw ConfigError("config: prior.kind must be student_t or gaussian");
    }
    if (p.contains("nu")) cfg.nu = p["nu"].get<double>();
  }
  if (cfg.prior_kind == PriorKind::StudentT && !(cfg.nu > 0.0))
    throw ConfigError("config: prior.nu must be positive");

  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t,
               {"learning_rate", "batch_size", "steps", "grad_clip_norm",
                "adam_betas", "adam_eps", "n_train", "hidden", "time_frequencies"},
               "train");
    if (t.contains("learning_rate")) cfg.train.learning_rate = t["learning_rate"].get<double>();
    if (t.contains("batch_size")) cfg.train.batch_size = t["batch_size"].get<int>();
    if (t.contains("steps")) cfg.train.steps = t["steps"].get<int>();
    if (t.contains("grad_clip_norm")) cfg.train.grad_clip_norm = t["grad_clip_norm"].get<double>();
    if (t.contains("adam_eps")) cfg.train.adam_eps = t["adam_eps"].get<double>();
    if (t.contains("adam_betas")) {
      const json& bb = t["adam_betas"];
      if (!bb.is_array() || bb.size() != 2)
        throw ConfigError("config: adam_betas must be [b1, b2]");
      cfg.train.adam_betas = {bb[0].get<double>(), bb[1].get<double>()};
    }
    if (t.contains("n_train")) cfg.n_train = t["n_train"].get<std::int64_t>();
    if (t.contains("hidden")) {
      cfg.arch.hidden.clear();
      for (const json& w : t["hidden"]) cfg.arch.hidden.push_back(w.get<int>());
    }
    if (t.contains("time_frequencies"))
      cfg.arch.time_frequencies = t["time_frequencies"].get<int>();
  }
  cfg.train.validate();
  if (cfg.n_train < 1) throw ConfigError("config: n_train must be >= 1");

  if (j.contains("sampler")) {
    const json& s = j["sampler"];
    check_keys(s, {"h", "T", "n"}, "sampler");
    if (s.contains("h")) cfg.h = s["h"].get<double>();
    if (s.contains("T")) cfg.T = s["T"].get<double>();
    if (s.contains("n")) cfg.n_sample = s["n"].get<std::int64_t>();
  }
  {
    SamplerConfig sc{cfg.h, cfg.T, cfg.n_sample, 0};
    try {
      sc.validate();
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  if (j.contains("eval")) {
    const json& e = j["eval"];
    check_keys(e, {"n_reference", "kl_k", "mode_occupancy"}, "eval");
    if (e.contains("n_reference")) cfg.eval.n_reference = e["n_reference"].get<std::int64_t>();
    if (e.contains("kl_k")) cfg.eval.kl_k = e["kl_k"].get<int>();
    if (e.contains("mode_occupancy")) cfg.eval.mode_occupancy = e["mode_occupancy"].get<bool>();
  }
  if (cfg.eval.kl_k < 1) throw ConfigError("config: eval.kl_k must be >= 1");

  if (j.contains("seeds")) {
    cfg.seeds.clear();
    for (const json& s : j["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  if (cfg.seeds.empty()) throw ConfigError("config: seeds must be nonempty");

  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  json j = json::parse(f, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config: invalid JSON in " + path);
  return parse_config_json(j);
}

json ExperimentConfig::echo() const {
  json j;
  if (!preset.empty()) j["preset"] = preset;
  j["domain"] = domain.to_json();
  j["target"] = target.to_json();
  j["map"]["variant"] =
      map_variant == MirrorMap::Variant::Regularized ? "regularized" : "log_barrier";
  if (map_variant == MirrorMap::Variant::Regularized) j["map"]["kappa"] = kappa;
  j["prior"]["kind"] = prior_kind == PriorKind::StudentT ? "student_t" : "gaussian";
  if (prior_kind == PriorKind::StudentT) j["prior"]["nu"] = nu;
  j["train"] = {{"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"steps", train.steps},
                {"grad_clip_norm", train.grad_clip_norm},
                {"adam_betas", {train.adam_betas.first, train.adam_betas.second}},
                {"adam_eps", train.adam_eps},
                {"n_train", n_train},
                {"hidden", arch.hidden},
                {"time_frequencies", arch.time_frequencies}};
  j["sampler"] = {{"h", h}, {"T", T}, {"n", n_sample}};
  j["eval"] = {{"n_reference", eval.n_reference},
               {"kl_k", eval.kl_k},
               {"mode_occupancy", eval.mode_occupancy}};
  j["seeds"] = seeds;
  j["output_dir"] = output_dir;
  return j;
}

Aggregate aggregate_values(const std::vector<double>& values) {
  Aggregate a;
  a.count = static_cast<int>(values.size());
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

namespace {

json metrics_json(const SeedResult& r) {
  json j;
  j["seed"] = r.seed;
  if (r.failed) {
    j["failed"] = true;
    j["error"] = r.error;
    return j;
  }
  j["mmd_squared"] = r.metrics.mmd_squared;
  j["kl"] = r.metrics.kl;
  if (r.metrics.w2)
    j["w2"] = *r.metrics.w2;
  else
    j["w2"] = nullptr;
  j["feasibility"] = r.metrics.feasibility;
  j["n_gen"] = r.metrics.n_gen;
  j["n_ref"] = r.metrics.n_ref;
  j["kernel_bandwidth"] = r.metrics.kernel_bandwidth;
  j["kl_k"] = r.metrics.kl_k;
  j["final_loss"] = r.train_report.final_loss;
  if (r.occupancy) j["occupancy"] = vec_to_json(*r.occupancy);
  if (r.occupancy_expected)
    j["occupancy_expected"] = vec_to_json(*r.occupancy_expected);
  return j;
}

json aggregate_entry(const Aggregate& a) {
  return json{{"mean", a.mean}, {"std", a.std}, {"count", a.count}};
}

Vec nearest_mean_occupancy(const Mat& samples,
                           const std::vector<TruncatedMixtureTarget::Component>& comps) {
  Vec counts = Vec::Zero(static_cast<Eigen::Index>(comps.size()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const double dist =
          (samples.row(i).transpose() - comps[c].mean).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = static_cast<int>(c);
      }
    }
    counts[best] += 1.0;
  }
  return counts / static_cast<double>(samples.rows());
}

// Acceptance-renormalized component weights by direct Monte Carlo.
Vec renormalized_weights(const TruncatedMixtureTarget& target, std::uint64_t seed,
                         int proposals_per_component = 20000) {
  Rng rng(seed, streams::kEval);
  const auto k = static_cast<Eigen::Index>(target.components().size());
  const int d = target.dim();
  Vec w(k);
  Vec x(d);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto& comp = target.components()[static_cast<std::size_t>(c)];
    const Vec sd = comp.diag_cov.array().sqrt();
    int inside = 0;
    for (int p = 0; p < proposals_per_component; ++p) {
      for (int j = 0; j < d; ++j) x[j] = comp.mean[j] + sd[j] * rng.normal();
      if (target.domain().contains(x)) ++inside;
    }
    w[c] = target.weights()[c] * static_cast<double>(inside) /
           static_cast<double>(proposals_per_component);
  }
  return w / w.sum();
}

std::string seed_suffix(std::uint64_t seed) {
  std::ostringstream os;
  os << "seed" << seed;
  return os.str();
}

}  // namespace

json ExperimentReport::aggregate_json() const {
  json j;
  j["config"] = config_echo;
  json per_seed = json::array();
  for (const auto& r : seeds) per_seed.push_back(metrics_json(r));
  j["per_seed"] = per_seed;
  j["aggregate"]["mmd_squared"] = aggregate_entry(mmd_squared);
  j["aggregate"]["kl"] = aggregate_entry(kl);
  j["aggregate"]["feasibility"] = aggregate_entry(feasibility);
  if (w2) j["aggregate"]["w2"] = aggregate_entry(*w2);
  return j;
}

std::string ExperimentReport::markdown() const {
  std::ostringstream os;
  os << "# Experiment report\n\n";
  std::string method = "mirror flow";
  if (config_echo.contains("prior") && config_echo.contains("map")) {
    const std::string prior = config_echo["prior"].value("kind", "");
    const std::string variant = config_echo["map"].value("variant", "");
    method = std::string("mirror ") +
             (prior == "student_t" ? "t-flow" : "G-flow") + ", " +
             (variant == "regularized" ? "regularized map" : "log-barrier map");
  }
  os << "method: " << method << "\n\n";
  os << "| metric | mean | std | seeds |\n|---|---|---|---|\n";
  auto row = [&](const char* name, const Aggregate& a) {
    os << "| " << name << " | " << a.mean << " | " << a.std << " | " << a.count
       << " |\n";
  };
  row("MMD^2", mmd_squared);
  row("KL", kl);
  row("Feasibility", feasibility);
  if (w2) row("W2", *w2);
  os << "\n## Per seed\n\n";
  os << "| seed | MMD^2 | KL | feasibility | final loss | train s | sample s | eval s |\n";
  os << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : seeds) {
    if (r.failed) {
      os << "| " << r.seed << " | failed: " << r.error << " | | | | | | |\n";
      continue;
    }
    os << "| " << r.seed << " | " << r.metrics.mmd_squared << " | " << r.metrics.kl
       << " | " << r.metrics.feasibility << " | " << r.train_report.final_loss
       << " | " << r.seconds_train << " | " << r.seconds_sample << " | "
       << r.seconds_eval << " |\n";
  }
  os << '\n';
  return os.str();
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, bool verbose,
                                bool write_outputs) {
  const ConvexDomain domain = cfg.domain.build();
  const MirrorMap map = cfg.map_variant == MirrorMap::Variant::Regularized
                            ? MirrorMap::regularized(domain, cfg.kappa)
                            : MirrorMap::log_barrier(domain);
  const TruncatedMixtureTarget target = cfg.target.build(domain);
  const Prior prior = cfg.prior_kind == PriorKind::StudentT
                          ? Prior::student_t(domain.dim(), cfg.nu)
                          : Prior::gaussian(domain.dim());

  ExperimentReport report;
  report.config_echo = cfg.echo();
  if (write_outputs) fs::create_directories(cfg.output_dir);

  std::optional<Vec> expected_occupancy;
  if (cfg.eval.mode_occupancy)
    expected_occupancy = renormalized_weights(target, cfg.target.seed);

  for (const std::uint64_t seed : cfg.seeds) {
    SeedResult r;
    r.seed = seed;
    try {
      double t0 = now_seconds();
      const Mat train_data = sample_truncated_mixture(
          target, cfg.n_train, derive_seed(seed, streams::kTrainData));
      SampleBatch train_batch{train_data, Space::Primal, seed, "truncated mixture"};
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      const MlpVelocity model =
          mirror_train(map, train_batch, prior, tc, cfg.arch, &r.train_report);
      r.seconds_train = now_seconds() - t0;

      t0 = now_seconds();
      SamplerConfig sc{cfg.h, cfg.T, cfg.n_sample, seed};
      const SampleBatch gen = mirror_sample(map, model, sc, prior);
      r.seconds_sample = now_seconds() - t0;

      t0 = now_seconds();
      const Mat ref = sample_truncated_mixture(
          target, cfg.eval.n_reference, derive_seed(seed, streams::kReference));
      double bw = 0.0;
      r.metrics.mmd_squared = mmd_squared(gen.data, ref, std::nullopt, &bw);
      r.metrics.kernel_bandwidth = bw;
      r.metrics.kl = kl_knn(ref, gen.data, cfg.eval.kl_k);  // KL(truth || generated)
      r.metrics.kl_k = cfg.eval.kl_k;
      r.metrics.feasibility = feasibility_rate(domain, gen.data);
      r.metrics.n_gen = gen.n();
      r.metrics.n_ref = ref.rows();
      if (gen.n() >= 1 && gen.n() == ref.rows() && gen.n() <= 1024)
        r.metrics.w2 = w2_exact(gen.data, ref);
      if (cfg.eval.mode_occupancy) {
        r.occupancy = nearest_mean_occupancy(gen.data, target.components());
        r.occupancy_expected = expected_occupancy;
      }
      r.seconds_eval = now_seconds() - t0;

      if (write_outputs) {
        const std::string tag = seed_suffix(seed);
        write_batch_csv(gen, cfg.output_dir + "/samples_" + tag + ".csv");
        std::ofstream mf_(cfg.output_dir + "/metrics_" + tag + ".json");
        mf_ << metrics_json(r).dump(2) << '\n';
      }
      if (verbose) {
        std::ostringstream os;
        os << "seed " << seed << ": mmd2=" << r.metrics.mmd_squared
           << " kl=" << r.metrics.kl << " feas=" << r.metrics.feasibility;
        std::fputs((os.str() + "\n").c_str(), stderr);
      }
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
      if (verbose) std::fputs((std::string("seed failed: ") + e.what() + "\n").c_str(), stderr);
    }
    report.seeds.push_back(std::move(r));
  }

  std::vector<double> mmds, kls, feas, w2s;
  for (const auto& r : report.seeds) {
    if (r.failed) continue;
    mmds.push_back(r.metrics.mmd_squared);
    kls.push_back(r.metrics.kl);
    feas.push_back(r.metrics.feasibility);
    if (r.metrics.w2) w2s.push_back(*r.metrics.w2);
  }
  report.mmd_squared = aggregate_values(mmds);
  report.kl = aggregate_values(kls);
  report.feasibility = aggregate_values(feas);
  if (!w2s.empty()) report.w2 = aggregate_values(w2s);

  if (write_outputs) {
    std::ofstream af(cfg.output_dir + "/aggregate.json");
    af << report.aggregate_json().dump(2) << '\n';
    std::ofstream rf(cfg.output_dir + "/report.md");
    rf << report.markdown();
  }
  return report;
}

void run_train_phase(const ExperimentConfig& cfg, const std::string& out_dir,
                     bool verbose) {
  const ConvexDomain domain = cfg.domain.build();
  const MirrorMap map = cfg.map_variant == MirrorMap::Variant::Regularized
                            ? MirrorMap::regularized(domain, cfg.kappa)
                            : MirrorMap::log_barrier(domain);
  const TruncatedMixtureTarget target = cfg.target.build(domain);
  const Prior prior = cfg.prior_kind == PriorKind::StudentT
                          ? Prior::student_t(domain.dim(), cfg.nu)
                          : Prior::gaussian(domain.dim());
  fs::create_directories(out_dir);
  for (const std::uint64_t seed : cfg.seeds) {
    const Mat train_data = sample_truncated_mixture(
        target, cfg.n_train, derive_seed(seed, streams::kTrainData));
    SampleBatch batch{train_data, Space::Primal, seed, "truncated mixture"};
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    TrainReport rep;
    const MlpVelocity model = mirror_train(map, batch, prior, tc, cfg.arch, &rep);
    const std::string tag = seed_suffix(seed);
    model.save_params(out_dir + "/model_" + tag + ".ckpt");
    json tj;
    tj["seed"] = seed;
    tj["final_loss"] = rep.final_loss;
    tj["initial_loss"] = rep.loss_curve.front().second;
    std::ofstream tf(out_dir + "/train_" + tag + ".json");
    tf << tj.dump(2) << '\n';
    if (verbose)
      std::fprintf(stderr, "trained seed %llu, final loss %g\n",
                   static_cast<unsigned long long>(seed), rep.final_loss);
  }
}

void run_sample_phase(const ExperimentConfig& cfg, const std::string& out_dir,
                      bool verbose) {
  const ConvexDomain domain = cfg.domain.build();
  const MirrorMap map = cfg.map_variant == MirrorMap::Variant::Regularized
                            ? MirrorMap::regularized(domain, cfg.kappa)
                            : MirrorMap::log_barrier(domain);
  const Prior prior = cfg.prior_kind == PriorKind::StudentT
                          ? Prior::student_t(domain.dim(), cfg.nu)
                          : Prior::gaussian(domain.dim());
  fs::create_directories(out_dir);
  for (const std::uint64_t seed : cfg.seeds) {
    const std::string tag = seed_suffix(seed);
    const MlpVelocity model = MlpVelocity::load(out_dir + "/model_" + tag + ".ckpt");
    SamplerConfig sc{cfg.h, cfg.T, cfg.n_sample, seed};
    const SampleBatch gen = mirror_sample(map, model, sc, prior);
    write_batch_csv(gen, out_dir + "/samples_" + tag + ".csv");
    if (verbose)
      std::fprintf(stderr, "sampled seed %llu: %lld rows\n",
                   static_cast<unsigned long long>(seed),
                   static_cast<long long>(gen.n()));
  }
}

void run_eval_phase(const ExperimentConfig& cfg, const std::string& out_dir,
                    bool verbose) {
  const ConvexDomain domain = cfg.domain.build();
  const TruncatedMixtureTarget target = cfg.target.build(domain);
  std::optional<Vec> expected_occupancy;
  if (cfg.eval.mode_occupancy)
    expected_occupancy = renormalized_weights(target, cfg.target.seed);

  std::vector<SeedResult> results;
  for (const std::uint64_t seed : cfg.seeds) {
    const std::string tag = seed_suffix(seed);
    SeedResult r;
    r.seed = seed;
    try {
      const SampleBatch gen = read_batch_csv(out_dir + "/samples_" + tag + ".csv");
      const Mat ref = sample_truncated_mixture(
          target, cfg.eval.n_reference, derive_seed(seed, streams::kReference));
      double bw = 0.0;
      r.metrics.mmd_squared = mmd_squared(gen.data, ref, std::nullopt, &bw);
      r.metrics.kernel_bandwidth = bw;
      r.metrics.kl = kl_knn(ref, gen.data, cfg.eval.kl_k);  // KL(truth || generated)
      r.metrics.kl_k = cfg.eval.kl_k;
      r.metrics.feasibility = feasibility_rate(domain, gen.data);
      r.metrics.n_gen = gen.n();
      r.metrics.n_ref = ref.rows();
      if (gen.n() >= 1 && gen.n() == ref.rows() && gen.n() <= 1024)
        r.metrics.w2 = w2_exact(gen.data, ref);
      if (cfg.eval.mode_occupancy) {
        r.occupancy = nearest_mean_occupancy(gen.data, target.components());
        r.occupancy_expected = expected_occupancy;
      }
      std::ofstream mf_(out_dir + "/metrics_" + tag + ".json");
      mf_ << metrics_json(r).dump(2) << '\n';
      if (verbose)
        std::fprintf(stderr, "eval seed %llu: mmd2=%g kl=%g\n",
                     static_cast<unsigned long long>(seed),
                     r.metrics.mmd_squared, r.metrics.kl);
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
    }
    results.push_back(std::move(r));
  }

  ExperimentReport report;
  report.config_echo = cfg.echo();
  report.seeds = std::move(results);
  std::vector<double> mmds, kls, feas;
  for (const auto& r : report.seeds) {
    if (r.failed) continue;
    mmds.push_back(r.metrics.mmd_squared);
    kls.push_back(r.metrics.kl);
    feas.push_back(r.metrics.feasibility);
  }
  report.mmd_squared = aggregate_values(mmds);
  report.kl = aggregate_values(kls);
  report.feasibility = aggregate_values(feas);
  std::ofstream af(out_dir + "/aggregate.json");
  af << report.aggregate_json().dump(2) << '\n';
  std::ofstream rf(out_dir + "/report.md");
  rf << report.markdown();
}

}  // namespace mf
