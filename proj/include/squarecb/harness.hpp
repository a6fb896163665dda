#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "squarecb/aggregating.hpp"
#include "squarecb/ball.hpp"
#include "squarecb/environments.hpp"
#include "squarecb/epoch_cover.hpp"
#include "squarecb/glm.hpp"
#include "squarecb/minimax.hpp"
#include "squarecb/ogd.hpp"
#include "squarecb/reduction.hpp"
#include "squarecb/vaw.hpp"

namespace squarecb {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config schema (version 1)
// ---------------------------------------------------------------------------

enum class Algorithm { squarecb, squarecb_hilbert, epsilon_greedy };
enum class TuningMode { theorem1, theorem6, theorem7, theorem8, manual };
enum class OracleFamily { aggregating, vaw, ogd, glmtron, newton_glm, epoch_cover };
enum class EnvKind { finite_class, gap_instance, misspecified, linear, glm, ball };

namespace detail {

template <class T>
struct EnumNames;

template <>
struct EnumNames<Algorithm> {
  static constexpr std::pair<Algorithm, const char*> table[] = {
      {Algorithm::squarecb, "squarecb"},
      {Algorithm::squarecb_hilbert, "squarecb_hilbert"},
      {Algorithm::epsilon_greedy, "epsilon_greedy"}};
};
template <>
struct EnumNames<TuningMode> {
  static constexpr std::pair<TuningMode, const char*> table[] = {
      {TuningMode::theorem1, "theorem1"}, {TuningMode::theorem6, "theorem6"},
      {TuningMode::theorem7, "theorem7"}, {TuningMode::theorem8, "theorem8"},
      {TuningMode::manual, "manual"}};
};
template <>
struct EnumNames<OracleFamily> {
  static constexpr std::pair<OracleFamily, const char*> table[] = {
      {OracleFamily::aggregating, "aggregating"}, {OracleFamily::vaw, "vaw"},
      {OracleFamily::ogd, "ogd"},                 {OracleFamily::glmtron, "glmtron"},
      {OracleFamily::newton_glm, "newton_glm"},   {OracleFamily::epoch_cover, "epoch_cover"}};
};
template <>
struct EnumNames<EnvKind> {
  static constexpr std::pair<EnvKind, const char*> table[] = {
      {EnvKind::finite_class, "finite_class"}, {EnvKind::gap_instance, "gap_instance"},
      {EnvKind::misspecified, "misspecified"}, {EnvKind::linear, "linear"},
      {EnvKind::glm, "glm"},                   {EnvKind::ball, "ball"}};
};

template <class T>
const char* enum_name(T v) {
  for (const auto& [e, n] : EnumNames<T>::table)
    if (e == v) return n;
  throw std::invalid_argument("unknown enum value");
}

template <class T>
T parse_enum(const std::string& s, const char* what) {
  for (const auto& [e, n] : EnumNames<T>::table)
    if (s == n) return e;
  throw std::invalid_argument(std::string("unknown ") + what + ": '" + s + "'");
}

}  // namespace detail

struct NoiseConfig {
  std::string kind = "bernoulli";  // none | bernoulli | clipped_gaussian
  double sigma = 0.1;              // clipped_gaussian scale
  double halfwidth = 0.2;          // ball env uniform noise halfwidth

  bool operator==(const NoiseConfig&) const = default;

  NoiseSpec to_spec() const {
    if (kind == "none") return {NoiseKind::none, 0.0};
    if (kind == "bernoulli") return {NoiseKind::bernoulli, 0.0};
    if (kind == "clipped_gaussian") return {NoiseKind::clipped_gaussian, sigma};
    throw std::invalid_argument("unknown noise kind: '" + kind + "'");
  }
};

struct LinkConfig {
  std::string name = "inherit";  // inherit | clipped_identity | logistic | table
  std::vector<std::pair<double, double>> knots;
  double floor = 0.0;

  bool operator==(const LinkConfig&) const = default;
};

inline LinkFunction make_link(const LinkConfig& cfg) {
  if (cfg.name == "clipped_identity" || cfg.name == "inherit") return clipped_identity_link();
  if (cfg.name == "logistic") return rescaled_logistic_link();
  if (cfg.name == "table") {
    LinkFunction link = table_link(cfg.knots, cfg.floor);
    validate_link(link);
    return link;
  }
  throw std::invalid_argument("unknown link: '" + cfg.name + "'");
}

struct EnvConfig {
  EnvKind kind = EnvKind::finite_class;
  int arms = 2;
  int class_size = 20;   // finite_class / misspecified
  int contexts = 10;     // finite_class / misspecified
  std::uint64_t seed = 1;
  double gap = 0.25;     // gap_instance
  int instance_index = 0;
  double eps = 0.0;      // misspecification level (misspecified / ball kinds)
  bool time_varying = false;
  int dim = 5;           // linear / glm / ball
  double signal_norm = 0.5;
  double theta_norm = 0.8;          // ball
  std::vector<double> theta_star;   // explicit linear/glm truth; empty = sample from seed
  LinkConfig link;                  // glm truth
  NoiseConfig noise;

  bool operator==(const EnvConfig&) const = default;
};

struct OracleConfig {
  OracleFamily family = OracleFamily::aggregating;
  double ridge = 1.0;          // vaw
  std::optional<double> step;  // ogd / glmtron / newton_glm
  double eta = 0.5;            // aggregating
  double cover_scale = 0.1;    // epoch_cover
  double sigma_init = 1.0;     // newton_glm
  LinkConfig link;             // glm oracles ("inherit" follows the env link)

  bool operator==(const OracleConfig&) const = default;
};

struct TuningConfig {
  TuningMode mode = TuningMode::theorem1;
  std::optional<double> gamma;  // manual
  std::optional<double> beta;   // manual
  std::optional<double> mu;     // defaults to K
  std::optional<double> eps;    // misspec level for theorem6/7 (defaults to env eps)
  std::optional<double> budget_override;

  bool operator==(const TuningConfig&) const = default;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::string name = "experiment";
  Algorithm algorithm = Algorithm::squarecb;
  long long horizon = 1000;
  std::vector<std::uint64_t> seeds = {1};
  double delta = 0.05;
  TuningConfig tuning;
  OracleConfig oracle;
  EnvConfig environment;
  std::string output_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

// ---- JSON round trip -------------------------------------------------------

inline json to_json(const NoiseConfig& c) {
  return {{"kind", c.kind}, {"sigma", c.sigma}, {"halfwidth", c.halfwidth}};
}
inline NoiseConfig noise_from_json(const json& j) {
  NoiseConfig c;
  c.kind = j.value("kind", c.kind);
  c.sigma = j.value("sigma", c.sigma);
  c.halfwidth = j.value("halfwidth", c.halfwidth);
  return c;
}

inline json to_json(const LinkConfig& c) {
  json j = {{"name", c.name}, {"floor", c.floor}};
  if (!c.knots.empty()) {
    json arr = json::array();
    for (const auto& [z, v] : c.knots) arr.push_back({z, v});
    j["knots"] = arr;
  }
  return j;
}
inline LinkConfig link_from_json(const json& j) {
  LinkConfig c;
  if (j.is_string()) {
    c.name = j.get<std::string>();
    return c;
  }
  c.name = j.value("name", c.name);
  c.floor = j.value("floor", c.floor);
  if (j.contains("knots"))
    for (const auto& kv : j.at("knots")) c.knots.emplace_back(kv.at(0).get<double>(), kv.at(1).get<double>());
  return c;
}

inline json to_json(const EnvConfig& c) {
  return {{"kind", detail::enum_name(c.kind)},
          {"arms", c.arms},
          {"class_size", c.class_size},
          {"contexts", c.contexts},
          {"seed", c.seed},
          {"gap", c.gap},
          {"instance_index", c.instance_index},
          {"eps", c.eps},
          {"time_varying", c.time_varying},
          {"dim", c.dim},
          {"signal_norm", c.signal_norm},
          {"theta_norm", c.theta_norm},
          {"theta_star", c.theta_star},
          {"link", to_json(c.link)},
          {"noise", to_json(c.noise)}};
}
inline EnvConfig env_from_json(const json& j) {
  EnvConfig c;
  c.kind = detail::parse_enum<EnvKind>(j.at("kind").get<std::string>(), "environment kind");
  c.arms = j.value("arms", c.arms);
  c.class_size = j.value("class_size", c.class_size);
  c.contexts = j.value("contexts", c.contexts);
  c.seed = j.value("seed", c.seed);
  c.gap = j.value("gap", c.gap);
  c.instance_index = j.value("instance_index", c.instance_index);
  c.eps = j.value("eps", c.eps);
  c.time_varying = j.value("time_varying", c.time_varying);
  c.dim = j.value("dim", c.dim);
  c.signal_norm = j.value("signal_norm", c.signal_norm);
  c.theta_norm = j.value("theta_norm", c.theta_norm);
  if (j.contains("theta_star")) c.theta_star = j.at("theta_star").get<std::vector<double>>();
  if (j.contains("link")) c.link = link_from_json(j.at("link"));
  if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
  return c;
}

inline json to_json(const OracleConfig& c) {
  json j = {{"family", detail::enum_name(c.family)}, {"ridge", c.ridge},     {"eta", c.eta},
            {"cover_scale", c.cover_scale},          {"sigma_init", c.sigma_init},
            {"link", to_json(c.link)}};
  if (c.step) j["step"] = *c.step;
  return j;
}
inline OracleConfig oracle_from_json(const json& j) {
  OracleConfig c;
  c.family = detail::parse_enum<OracleFamily>(j.at("family").get<std::string>(), "oracle family");
  c.ridge = j.value("ridge", c.ridge);
  if (j.contains("step")) c.step = j.at("step").get<double>();
  c.eta = j.value("eta", c.eta);
  c.cover_scale = j.value("cover_scale", c.cover_scale);
  c.sigma_init = j.value("sigma_init", c.sigma_init);
  if (j.contains("link")) c.link = link_from_json(j.at("link"));
  return c;
}

inline json to_json(const TuningConfig& c) {
  json j = {{"mode", detail::enum_name(c.mode)}};
  if (c.gamma) j["gamma"] = *c.gamma;
  if (c.beta) j["beta"] = *c.beta;
  if (c.mu) j["mu"] = *c.mu;
  if (c.eps) j["eps"] = *c.eps;
  if (c.budget_override) j["budget_override"] = *c.budget_override;
  return j;
}
inline TuningConfig tuning_from_json(const json& j) {
  TuningConfig c;
  c.mode = detail::parse_enum<TuningMode>(j.at("mode").get<std::string>(), "tuning mode");
  if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
  if (j.contains("beta")) c.beta = j.at("beta").get<double>();
  if (j.contains("mu")) c.mu = j.at("mu").get<double>();
  if (j.contains("eps")) c.eps = j.at("eps").get<double>();
  if (j.contains("budget_override")) c.budget_override = j.at("budget_override").get<double>();
  return c;
}

inline json to_json(const ExperimentConfig& c) {
  return {{"schema_version", c.schema_version},
          {"name", c.name},
          {"algorithm", detail::enum_name(c.algorithm)},
          {"horizon", c.horizon},
          {"seeds", c.seeds},
          {"delta", c.delta},
          {"tuning", to_json(c.tuning)},
          {"oracle", to_json(c.oracle)},
          {"environment", to_json(c.environment)},
          {"output_dir", c.output_dir}};
}
inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.schema_version = j.value("schema_version", 1);
  if (c.schema_version != 1)
    throw std::invalid_argument("unsupported schema_version " + std::to_string(c.schema_version));
  c.name = j.value("name", c.name);
  std::string alg = j.at("algorithm").get<std::string>();
  if (alg == "epsilon_greedy_baseline") alg = "epsilon_greedy";  // accepted alias
  c.algorithm = detail::parse_enum<Algorithm>(alg, "algorithm");
  c.horizon = j.at("horizon").get<long long>();
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.delta = j.value("delta", c.delta);
  if (j.contains("tuning")) c.tuning = tuning_from_json(j.at("tuning"));
  c.oracle = oracle_from_json(j.at("oracle"));
  c.environment = env_from_json(j.at("environment"));
  c.output_dir = j.value("output_dir", c.output_dir);
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  return config_from_json(json::parse(text));
}
inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2); }

// ---------------------------------------------------------------------------
// Environment construction and audit serialization
// ---------------------------------------------------------------------------

struct BuiltEnv {
  std::optional<TabularEnv> tabular;
  std::optional<FeatureEnv> feature;
  std::optional<BallEnv> ball;
  long long effective_horizon = 0;  // gap instances pad T for block divisibility

  double misspec_level() const {
    if (tabular) return std::max(tabular->misspec_level(), tabular->time_varying_misspec());
    return 0.0;
  }
};

inline json instance_to_json(const BuiltEnv& env, const EnvConfig& cfg) {
  json j;
  j["kind"] = detail::enum_name(cfg.kind);
  if (env.tabular) {
    const TabularEnv& e = *env.tabular;
    json cls = json::array();
    for (const auto& h : e.hypothesis_class()) cls.push_back(h.values);
    j["n_contexts"] = e.n_contexts();
    j["arms"] = e.arms();
    j["fstar_index"] = e.fstar_index();
    j["class"] = cls;
    j["true_means"] = e.true_means_table();
    j["block_len"] = e.block_len();
    j["time_varying_eps"] = e.time_varying_misspec();
  } else if (env.feature) {
    const FeatureEnv& e = *env.feature;
    j["arms"] = e.arms();
    j["dim"] = e.dim();
    j["theta_star"] = e.theta_star();
    j["link"] = e.config().link.name;
  } else if (env.ball) {
    j["dim"] = env.ball->dim();
    j["theta_star"] = env.ball->theta_star();
    j["noise_halfwidth"] = env.ball->noise_halfwidth();
  }
  j["noise"] = to_json(cfg.noise);
  return j;
}

inline BuiltEnv build_environment(const EnvConfig& cfg, long long horizon) {
  BuiltEnv out;
  out.effective_horizon = horizon;
  switch (cfg.kind) {
    case EnvKind::finite_class: {
      TabularEnv env = make_finite_class_env(cfg.arms, cfg.class_size, cfg.seed, cfg.contexts);
      out.tabular = TabularEnv(env.n_contexts(), env.arms(), env.hypothesis_class(), env.fstar_index(),
                               cfg.noise.to_spec());
      break;
    }
    case EnvKind::gap_instance: {
      GapInstanceFamily fam = make_gap_family(horizon, cfg.gap);
      if (cfg.instance_index < 0 || cfg.instance_index >= fam.size())
        throw std::invalid_argument("gap instance index out of range");
      out.tabular = fam.instance_env(cfg.instance_index);
      out.effective_horizon = fam.horizon;
      break;
    }
    case EnvKind::misspecified: {
      TabularEnv base = make_finite_class_env(cfg.arms, cfg.class_size, cfg.seed, cfg.contexts);
      out.tabular = make_misspecified_env(base, cfg.eps, cfg.seed, cfg.time_varying);
      break;
    }
    case EnvKind::linear: {
      FeatureEnv::Config fc;
      fc.family = FeatureFamily::linear;
      fc.arms = cfg.arms;
      fc.dim = cfg.dim;
      fc.signal_norm = cfg.signal_norm;
      fc.noise = cfg.noise.to_spec();
      fc.seed = cfg.seed;
      if (!cfg.theta_star.empty()) fc.theta_star = cfg.theta_star;
      out.feature = FeatureEnv(fc);
      break;
    }
    case EnvKind::glm: {
      FeatureEnv::Config fc;
      fc.family = FeatureFamily::glm;
      fc.arms = cfg.arms;
      fc.dim = cfg.dim;
      fc.link = make_link(cfg.link.name == "inherit" ? LinkConfig{"logistic", {}, 0.25} : cfg.link);
      fc.noise = cfg.noise.to_spec();
      fc.seed = cfg.seed;
      if (!cfg.theta_star.empty()) fc.theta_star = cfg.theta_star;
      out.feature = FeatureEnv(fc);
      break;
    }
    case EnvKind::ball: {
      out.ball = BallEnv::random(cfg.dim, cfg.theta_norm, cfg.noise.halfwidth, cfg.seed, cfg.eps);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle construction
// ---------------------------------------------------------------------------

using OracleVariant = std::variant<AggregatingOracle<TableHypothesis>, EpochCoverOracle<ContextTable>,
                                   VawOracle, OgdOracle, GlmtronOracle, NewtonGlmOracle>;

inline LinkFunction resolve_oracle_link(const OracleConfig& oc, const EnvConfig& ec) {
  if (oc.link.name != "inherit") return make_link(oc.link);
  if (ec.kind == EnvKind::glm)
    return make_link(ec.link.name == "inherit" ? LinkConfig{"logistic", {}, 0.25} : ec.link);
  return clipped_identity_link();
}

inline OracleVariant build_oracle(const OracleConfig& oc, const EnvConfig& ec, const BuiltEnv& env,
                                  long long horizon) {
  switch (oc.family) {
    case OracleFamily::aggregating: {
      if (!env.tabular) throw std::invalid_argument("aggregating oracle needs an enumerated-context environment");
      return AggregatingOracle<TableHypothesis>(env.tabular->hypothesis_class(), oc.eta);
    }
    case OracleFamily::epoch_cover: {
      if (!env.tabular) throw std::invalid_argument("epoch cover oracle needs an enumerated-context environment");
      // base class: per-arm slices of the joint class (deduplicated)
      const TabularEnv& e = *env.tabular;
      std::vector<ContextTable> base;
      for (const auto& h : e.hypothesis_class()) {
        for (int a = 0; a < e.arms(); ++a) {
          ContextTable g;
          g.values.resize(e.n_contexts());
          for (int c = 0; c < e.n_contexts(); ++c)
            g.values[c] = h.values[static_cast<std::size_t>(c) * e.arms() + a];
          bool dup = false;
          for (const auto& existing : base)
            if (existing.values == g.values) {
              dup = true;
              break;
            }
          if (!dup) base.push_back(std::move(g));
        }
      }
      return EpochCoverOracle<ContextTable>(std::move(base), e.arms(), oc.cover_scale);
    }
    case OracleFamily::vaw: {
      if (!env.feature) throw std::invalid_argument("vaw oracle needs a feature environment");
      return VawOracle(env.feature->dim(), oc.ridge);
    }
    case OracleFamily::ogd: {
      if (!env.feature) throw std::invalid_argument("ogd oracle needs a feature environment");
      OgdOracle::Options opts;
      opts.step = oc.step;
      opts.horizon = horizon;
      return OgdOracle(env.feature->dim(), opts);
    }
    case OracleFamily::glmtron: {
      if (!env.feature) throw std::invalid_argument("glmtron oracle needs a feature environment");
      GlmtronOracle::Options opts;
      opts.step = oc.step;
      opts.horizon = horizon;
      return GlmtronOracle(env.feature->dim(), resolve_oracle_link(oc, ec), opts);
    }
    case OracleFamily::newton_glm: {
      if (!env.feature) throw std::invalid_argument("newton_glm oracle needs a feature environment");
      NewtonGlmOracle::Options opts;
      opts.step = oc.step;
      opts.sigma_init = oc.sigma_init;
      return NewtonGlmOracle(env.feature->dim(), resolve_oracle_link(oc, ec), opts);
    }
  }
  throw std::invalid_argument("unknown oracle family");
}

inline OracleRegretBudget resolve_budget(const ExperimentConfig& cfg, const BuiltEnv& env,
                                         long long horizon) {
  if (cfg.tuning.budget_override)
    return {*cfg.tuning.budget_override, BudgetProvenance::user_supplied};
  if (cfg.algorithm == Algorithm::squarecb_hilbert)
    return vaw_budget(cfg.environment.dim, horizon);
  const bool tabular_oracle =
      cfg.oracle.family == OracleFamily::aggregating || cfg.oracle.family == OracleFamily::epoch_cover;
  if (tabular_oracle && !env.tabular)
    throw std::invalid_argument("config: tabular oracle families need an enumerated-context environment");
  if (!tabular_oracle && !env.feature)
    throw std::invalid_argument("config: feature oracle families need a linear or glm environment");
  switch (cfg.oracle.family) {
    case OracleFamily::aggregating:
      return finite_class_budget(env.tabular->hypothesis_class().size());
    case OracleFamily::epoch_cover: {
      // conservative cap: every epoch restarts an aggregating run over a
      // tensor class no larger than |G|^K
      const double g = static_cast<double>(env.tabular->hypothesis_class().size()) *
                       env.tabular->arms();
      long long epochs = 0, boundary = 1;
      int m = 0;
      while (boundary <= horizon) {
        ++epochs;
        long long next = boundary;
        while (next <= boundary) next = static_cast<long long>(std::ceil(std::exp(static_cast<double>(m++))));
        boundary = next;
      }
      return {2.0 * env.tabular->arms() * std::log(std::max(2.0, g)) * static_cast<double>(epochs),
              BudgetProvenance::user_supplied};
    }
    case OracleFamily::vaw:
      return vaw_budget(env.feature->dim(), horizon);
    case OracleFamily::ogd:
      return ogd_budget(horizon);
    case OracleFamily::glmtron:
      return glmtron_budget(horizon);
    case OracleFamily::newton_glm:
      return newton_glm_budget(env.feature->dim(), horizon,
                               resolve_oracle_link(cfg.oracle, cfg.environment).derivative_floor);
  }
  throw std::invalid_argument("unknown oracle family");
}

// ---------------------------------------------------------------------------
// Run summaries
// ---------------------------------------------------------------------------

struct SeedOutcome {
  std::uint64_t seed = 0;
  double realized = 0.0;
  double pseudo = 0.0;
  long long clip_warnings = 0;
  bool bound_satisfied = true;
};

struct RunSummary {
  std::string name;
  std::string algorithm;
  long long horizon = 0;
  double delta = 0.05;
  double budget = 0.0;
  std::string budget_provenance;
  double rate_parameter = 0.0;  // gamma (finite actions) or beta (ball)
  std::optional<double> bound;
  std::string bound_metric = "realized";  // which regret the bound constrains
  std::vector<SeedOutcome> per_seed;
  double mean_regret = 0.0;
  double median_regret = 0.0;
  double q10 = 0.0, q90 = 0.0, min_regret = 0.0, max_regret = 0.0;
  double satisfaction_fraction = 1.0;
  bool outside_theorem_scope = false;
  double wall_ms = 0.0;
  json environment_audit;
};

inline const char* budget_provenance_name(BudgetProvenance p) {
  switch (p) {
    case BudgetProvenance::finite_class_2lnF: return "finite_class_2lnF";
    case BudgetProvenance::vaw_dlogT: return "vaw_dlogT";
    case BudgetProvenance::ogd_sqrtT: return "ogd_sqrtT";
    case BudgetProvenance::glmtron_sqrtT: return "glmtron_sqrtT";
    case BudgetProvenance::newton_glm_dlogT: return "newton_glm_dlogT";
    case BudgetProvenance::user_supplied: return "user_supplied";
  }
  return "user_supplied";
}

inline json to_json(const RunSummary& s) {
  json per_seed = json::array();
  for (const auto& o : s.per_seed)
    per_seed.push_back({{"seed", o.seed},
                        {"realized_regret", o.realized},
                        {"pseudo_regret", o.pseudo},
                        {"clip_warnings", o.clip_warnings},
                        {"bound_satisfied", o.bound_satisfied}});
  json j = {{"name", s.name},
            {"algorithm", s.algorithm},
            {"horizon", s.horizon},
            {"delta", s.delta},
            {"budget", s.budget},
            {"budget_provenance", s.budget_provenance},
            {"rate_parameter", s.rate_parameter},
            {"bound_metric", s.bound_metric},
            {"per_seed", per_seed},
            {"mean_regret", s.mean_regret},
            {"median_regret", s.median_regret},
            {"q10", s.q10},
            {"q90", s.q90},
            {"min_regret", s.min_regret},
            {"max_regret", s.max_regret},
            {"satisfaction_fraction", s.satisfaction_fraction},
            {"outside_theorem_scope", s.outside_theorem_scope},
            {"wall_ms", s.wall_ms},
            {"environment", s.environment_audit}};
  if (s.bound) j["bound"] = *s.bound;
  return j;
}

inline RunSummary summary_from_json(const json& j) {
  RunSummary s;
  s.name = j.at("name").get<std::string>();
  s.algorithm = j.at("algorithm").get<std::string>();
  s.horizon = j.at("horizon").get<long long>();
  s.delta = j.value("delta", 0.05);
  s.budget = j.value("budget", 0.0);
  s.budget_provenance = j.value("budget_provenance", std::string("user_supplied"));
  s.rate_parameter = j.value("rate_parameter", 0.0);
  s.bound_metric = j.value("bound_metric", std::string("realized"));
  if (j.contains("bound")) s.bound = j.at("bound").get<double>();
  for (const auto& o : j.at("per_seed")) {
    SeedOutcome out;
    out.seed = o.at("seed").get<std::uint64_t>();
    out.realized = o.at("realized_regret").get<double>();
    out.pseudo = o.at("pseudo_regret").get<double>();
    out.clip_warnings = o.value("clip_warnings", 0LL);
    out.bound_satisfied = o.value("bound_satisfied", true);
    s.per_seed.push_back(out);
  }
  s.mean_regret = j.value("mean_regret", 0.0);
  s.median_regret = j.value("median_regret", 0.0);
  s.q10 = j.value("q10", 0.0);
  s.q90 = j.value("q90", 0.0);
  s.min_regret = j.value("min_regret", 0.0);
  s.max_regret = j.value("max_regret", 0.0);
  s.satisfaction_fraction = j.value("satisfaction_fraction", 1.0);
  s.outside_theorem_scope = j.value("outside_theorem_scope", false);
  s.wall_ms = j.value("wall_ms", 0.0);
  if (j.contains("environment")) s.environment_audit = j.at("environment");
  return s;
}

// ---------------------------------------------------------------------------
// Experiment execution
// ---------------------------------------------------------------------------

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.horizon <= 0) throw std::invalid_argument("config: horizon must be positive");
  if (cfg.seeds.empty()) throw std::invalid_argument("config: at least one seed required");
  std::vector<std::uint64_t> sorted = cfg.seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("config: seeds must be distinct");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("config: delta must lie in (0,1)");
  if (cfg.algorithm == Algorithm::squarecb_hilbert) {
    if (cfg.environment.kind != EnvKind::ball)
      throw std::invalid_argument("config: squarecb_hilbert requires the ball environment");
    if (cfg.oracle.family != OracleFamily::vaw)
      throw std::invalid_argument("config: squarecb_hilbert currently supports the vaw oracle");
    if (cfg.tuning.mode != TuningMode::theorem8 && cfg.tuning.mode != TuningMode::manual)
      throw std::invalid_argument("config: ball runs tune with theorem8 or manual beta");
    if (cfg.tuning.mode == TuningMode::manual && !cfg.tuning.beta)
      throw std::invalid_argument("config: manual tuning needs beta for ball runs");
  } else {
    if (cfg.environment.kind == EnvKind::ball)
      throw std::invalid_argument("config: the ball environment requires squarecb_hilbert");
    if (cfg.tuning.mode == TuningMode::theorem8)
      throw std::invalid_argument("config: theorem8 tuning applies to squarecb_hilbert only");
    if (cfg.tuning.mode == TuningMode::manual && cfg.algorithm == Algorithm::squarecb && !cfg.tuning.gamma)
      throw std::invalid_argument("config: manual tuning needs gamma");
  }
}

struct ExperimentOutput {
  RunSummary summary;
  std::vector<std::pair<std::uint64_t, std::string>> ledgers;  // (seed, csv)
  json instance;
};

// Executes all seeds (optionally across threads; runs are independent and
// results merge by seed), without touching the filesystem.
inline ExperimentOutput execute_experiment(const ExperimentConfig& cfg, int threads = 1) {
  validate_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  BuiltEnv env = build_environment(cfg.environment, cfg.horizon);
  const long long horizon = env.effective_horizon;
  const OracleRegretBudget budget = resolve_budget(cfg, env, horizon);

  // rate parameter and theoretical bound
  double rate = 0.0;
  std::optional<double> bound;
  std::string bound_metric = "realized";
  const double eps = cfg.tuning.eps.value_or(cfg.environment.kind == EnvKind::misspecified
                                                 ? cfg.environment.eps
                                                 : 0.0);
  const int arms = cfg.environment.arms;
  switch (cfg.tuning.mode) {
    case TuningMode::theorem1:
      rate = tune_gamma_realizable(arms, horizon, budget, cfg.delta);
      bound = theorem1_bound(arms, horizon, budget.bound, cfg.delta);
      bound_metric = "realized";
      break;
    case TuningMode::theorem6:
      rate = tune_gamma_misspecified(arms, horizon, budget, eps, AdversaryModel::stochastic);
      bound = theorem6_bound(arms, horizon, budget.bound, eps);
      bound_metric = "pseudo";
      break;
    case TuningMode::theorem7:
      rate = tune_gamma_misspecified(arms, horizon, budget, eps, AdversaryModel::adaptive);
      bound = theorem7_bound(arms, horizon, budget.bound, eps);
      bound_metric = "pseudo";
      break;
    case TuningMode::theorem8:
      rate = tune_beta(cfg.environment.dim, horizon, budget, cfg.delta);
      bound = theorem8_bound(cfg.environment.dim, horizon, budget.bound, cfg.delta);
      bound_metric = "realized";
      break;
    case TuningMode::manual:
      rate = cfg.algorithm == Algorithm::squarecb_hilbert ? cfg.tuning.beta.value_or(0.1)
                                                          : cfg.tuning.gamma.value_or(1.0);
      if (!(rate > 0.0)) throw std::invalid_argument("config: manual rate parameter must be positive");
      break;
  }
  // misspecified ball runs are exposed for measurement only: no bound claim
  const bool ball_misspec = env.ball && env.ball->misspec_eps() > 0.0;
  if (ball_misspec) bound.reset();

  const std::size_t n = cfg.seeds.size();
  std::vector<RegretLedger> ledgers(n);
  auto run_seed = [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    if (cfg.algorithm == Algorithm::squarecb_hilbert) {
      BallVawOracle oracle(env.ball->dim(), cfg.oracle.ridge);
      ledgers[i] = run_squarecb_hilbert(*env.ball, oracle, rate, horizon, seed);
      return;
    }
    OracleVariant oracle = build_oracle(cfg.oracle, cfg.environment, env, horizon);
    auto dispatch = [&](auto& e) {
      std::visit(
          [&](auto& o) {
            if (cfg.algorithm == Algorithm::squarecb) {
              const ExplorationParams params(rate, arms, cfg.tuning.mu.value_or(0.0));
              ledgers[i] = run_squarecb(e, o, params, horizon, seed);
            } else {
              ledgers[i] = run_epsilon_greedy(e, o, horizon, seed);
            }
          },
          oracle);
    };
    if (env.tabular)
      dispatch(*env.tabular);
    else if (env.feature)
      dispatch(*env.feature);
    else
      throw std::invalid_argument("config: no environment built");
  };

  if (threads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) run_seed(i);
  } else {
    const int nthreads = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run_seed(i);
      });
    for (auto& th : pool) th.join();
  }

  ExperimentOutput out;
  out.instance = instance_to_json(env, cfg.environment);

  RunSummary& s = out.summary;
  s.name = cfg.name;
  s.algorithm = detail::enum_name(cfg.algorithm);
  s.horizon = horizon;
  s.delta = cfg.delta;
  s.budget = budget.bound;
  s.budget_provenance = budget_provenance_name(budget.provenance);
  s.rate_parameter = rate;
  s.bound = bound;
  s.bound_metric = bound_metric;
  s.environment_audit = to_json(cfg.environment);
  if (env.misspec_level() > 0.0 || eps > 0.0) {
    const OracleFamily f = cfg.oracle.family;
    if (f == OracleFamily::glmtron || f == OracleFamily::newton_glm) {
      s.outside_theorem_scope = true;
      std::cerr << "[harness] warning: misspecified environment with a realizability-only oracle; "
                   "no theorem covers this combination\n";
    }
  }
  if (ball_misspec) s.outside_theorem_scope = true;

  std::vector<double> metric;
  for (std::size_t i = 0; i < n; ++i) {
    const RegretLedger& lg = ledgers[i];
    SeedOutcome o;
    o.seed = cfg.seeds[i];
    o.realized = lg.realized_regret;
    o.pseudo = lg.pseudo_regret;
    o.clip_warnings = lg.clip_warnings;
    const double m = bound_metric == "pseudo" ? o.pseudo : o.realized;
    o.bound_satisfied = !bound || m <= *bound;
    metric.push_back(m);
    s.per_seed.push_back(o);

    std::ostringstream csv;
    lg.write_csv(csv);
    out.ledgers.emplace_back(cfg.seeds[i], csv.str());
  }

  std::vector<double> sorted = metric;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const std::size_t idx = static_cast<std::size_t>(q * (sorted.size() - 1) + 0.5);
    return sorted[std::min(idx, sorted.size() - 1)];
  };
  s.mean_regret = 0.0;
  for (double v : metric) s.mean_regret += v;
  s.mean_regret /= static_cast<double>(n);
  s.median_regret = quantile(0.5);
  s.q10 = quantile(0.1);
  s.q90 = quantile(0.9);
  s.min_regret = sorted.front();
  s.max_regret = sorted.back();
  if (bound) {
    std::size_t ok = 0;
    for (const auto& o : s.per_seed) ok += o.bound_satisfied ? 1 : 0;
    s.satisfaction_fraction = static_cast<double>(ok) / static_cast<double>(n);
  }
  s.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// execute + persist: one ledger CSV per seed, the realized instance, and the
// summary JSON, all under output_dir.
inline RunSummary run_experiment(const ExperimentConfig& cfg, int threads = 1) {
  ExperimentOutput out = execute_experiment(cfg, threads);
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());

  auto write_file = [](const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed for '" + p.string() + "'");
  };

  for (const auto& [seed, csv] : out.ledgers)
    write_file(dir / (cfg.name + "_seed" + std::to_string(seed) + ".csv"), csv);
  write_file(dir / (cfg.name + "_instance.json"), out.instance.dump(2) + "\n");
  write_file(dir / (cfg.name + "_summary.json"), to_json(out.summary).dump(2) + "\n");
  return out.summary;
}

// ---------------------------------------------------------------------------
// Cross-run comparison
// ---------------------------------------------------------------------------

struct CompareRow {
  std::string name;
  std::string algorithm;
  std::size_t seeds = 0;
  double mean_regret = 0.0;
  double median_regret = 0.0;
  std::optional<double> bound;
  double satisfaction_fraction = 1.0;
  double wall_ms = 0.0;
};

struct CompareReport {
  std::vector<CompareRow> rows;

  std::string to_csv() const {
    std::ostringstream out;
    out << "name,algorithm,seeds,mean_regret,median_regret,bound,satisfaction_fraction,wall_ms\n";
    for (const auto& r : rows) {
      out << r.name << ',' << r.algorithm << ',' << r.seeds << ',' << format_double(r.mean_regret)
          << ',' << format_double(r.median_regret) << ','
          << (r.bound ? format_double(*r.bound) : std::string("")) << ','
          << format_double(r.satisfaction_fraction) << ',' << format_double(r.wall_ms) << '\n';
    }
    return out.str();
  }

  std::string render_text() const {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"name", "algorithm", "seeds", "mean_regret", "median", "bound", "satisfied", "wall_ms"});
    auto num = [](double v) {
      std::ostringstream o;
      o.precision(6);
      o << v;
      return o.str();
    };
    for (const auto& r : rows)
      cells.push_back({r.name, r.algorithm, std::to_string(r.seeds), num(r.mean_regret),
                       num(r.median_regret), r.bound ? num(*r.bound) : "-",
                       num(r.satisfaction_fraction), num(r.wall_ms)});
    std::vector<std::size_t> width(cells[0].size(), 0);
    for (const auto& row : cells)
      for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream out;
    for (const auto& row : cells) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        out << row[c] << std::string(width[c] - row[c].size() + 2, ' ');
      }
      out << '\n';
    }
    return out.str();
  }
};

// Side-by-side comparison of runs that share a horizon and environment,
// ordered by mean regret.
inline CompareReport compare_report(const std::vector<RunSummary>& summaries) {
  if (summaries.empty()) throw std::invalid_argument("compare_report: no summaries given");
  for (const auto& s : summaries) {
    if (s.horizon != summaries.front().horizon)
      throw std::invalid_argument("compare_report: summaries have mismatched horizons");
    if (s.environment_audit != summaries.front().environment_audit)
      throw std::invalid_argument("compare_report: summaries come from different environments");
  }
  CompareReport report;
  for (const auto& s : summaries)
    report.rows.push_back({s.name, s.algorithm, s.per_seed.size(), s.mean_regret, s.median_regret,
                           s.bound, s.satisfaction_fraction, s.wall_ms});
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const CompareRow& a, const CompareRow& b) { return a.mean_regret < b.mean_regret; });
  return report;
}

// JSON for the minimax certificate report (CLI output).
inline json to_json(const CertificateReport& r) {
  json violations = json::array();
  for (const auto& v : r.violations)
    violations.push_back({{"yhat", v.instance.yhat},
                          {"fstar", v.instance.fstar},
                          {"astar", v.instance.astar},
                          {"gamma", v.instance.gamma},
                          {"mu", v.instance.mu},
                          {"objective", v.objective},
                          {"bound", v.bound}});
  return {{"trials", r.trials},
          {"max_objective", r.max_objective},
          {"worst_margin", r.worst_margin},
          {"certificate", r.certificate_holds},
          {"violations", violations}};
}

}  // namespace squarecb
