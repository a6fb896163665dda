// Acceptance suite: one test case per numbered criterion, each printing a
// single pass/fail line with its measured quantities.

#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "squarecb/harness.hpp"

using namespace squarecb;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void report(int criterion, const std::string& what, bool pass, const std::string& detail) {
  std::cout << "[acceptance] criterion " << criterion << " (" << what << "): "
            << (pass ? "PASS" : "FAIL") << " -- " << detail << std::endl;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::vector<std::uint64_t> forty_seeds() {
  std::vector<std::uint64_t> seeds;
  for (int s = 1; s <= 40; ++s) seeds.push_back(s);
  return seeds;
}

ExperimentConfig theorem1_config(long long horizon) {
  ExperimentConfig cfg;
  cfg.name = "thm1_finite";
  cfg.algorithm = Algorithm::squarecb;
  cfg.horizon = horizon;
  cfg.seeds = forty_seeds();
  cfg.delta = 0.05;
  cfg.tuning.mode = TuningMode::theorem1;
  cfg.oracle.family = OracleFamily::aggregating;
  cfg.environment.kind = EnvKind::finite_class;
  cfg.environment.arms = 5;
  cfg.environment.class_size = 20;
  cfg.environment.contexts = 10;
  cfg.environment.seed = 7;
  cfg.environment.noise.kind = "bernoulli";
  return cfg;
}

ExperimentConfig theorem6_config() {
  ExperimentConfig cfg;
  cfg.name = "thm6_misspec";
  cfg.algorithm = Algorithm::squarecb;
  cfg.horizon = 10000;
  cfg.seeds = forty_seeds();
  cfg.delta = 0.05;
  cfg.tuning.mode = TuningMode::theorem6;
  cfg.oracle.family = OracleFamily::aggregating;
  cfg.environment.kind = EnvKind::misspecified;
  cfg.environment.arms = 4;
  cfg.environment.class_size = 20;
  cfg.environment.contexts = 10;
  cfg.environment.eps = 0.05;
  cfg.environment.seed = 7;
  cfg.environment.noise.kind = "bernoulli";
  return cfg;
}

ExperimentConfig theorem8_config() {
  ExperimentConfig cfg;
  cfg.name = "thm8_ball";
  cfg.algorithm = Algorithm::squarecb_hilbert;
  cfg.horizon = 10000;
  cfg.seeds = forty_seeds();
  cfg.delta = 0.05;
  cfg.tuning.mode = TuningMode::theorem8;
  cfg.oracle.family = OracleFamily::vaw;
  cfg.environment.kind = EnvKind::ball;
  cfg.environment.dim = 3;
  cfg.environment.theta_norm = 0.8;
  cfg.environment.noise.halfwidth = 0.2;
  cfg.environment.seed = 7;
  return cfg;
}

struct GapSweepResult {
  double max_mean_regret = 0.0;
  int argmax_instance = -1;
  std::vector<std::uint64_t> ledger_hashes;  // one per (instance, seed), in order
};

GapSweepResult run_gap_sweep() {
  const GapInstanceFamily fam = make_gap_family(3200, 0.25);
  const OracleRegretBudget budget = finite_class_budget(fam.instances.size());
  const double gamma = tune_gamma_realizable(2, fam.horizon, budget, 0.05);
  const ExplorationParams params(gamma, 2);

  GapSweepResult result;
  for (int i = 0; i < fam.size(); ++i) {
    const TabularEnv env = fam.instance_env(i);
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      AggregatingOracle<TableHypothesis> oracle(fam.instances);
      const RegretLedger ledger = run_squarecb(env, oracle, params, fam.horizon, seed);
      mean += ledger.realized_regret;
      std::ostringstream csv;
      ledger.write_csv(csv);
      result.ledger_hashes.push_back(fnv1a(csv.str()));
    }
    mean /= 20.0;
    if (mean > result.max_mean_regret) {
      result.max_mean_regret = mean;
      result.argmax_instance = i;
    }
  }
  return result;
}

// independent circle-grid oracle for the d=2 sigma-norm projection
Vec circle_grid_projection(const Mat& sigma, const Vec& target) {
  auto objective = [&](double phi) {
    Vec v = {std::cos(phi), std::sin(phi)};
    Vec diff = v;
    axpy(-1.0, target, diff);
    return sigma.quad_form(diff);
  };
  double best_phi = 0.0, best = objective(0.0);
  double lo = 0.0, hi = 2.0 * M_PI;
  int points = 4096;
  for (int round = 0; round < 6; ++round) {
    const double step = (hi - lo) / points;
    for (int i = 0; i <= points; ++i) {
      const double phi = lo + i * step;
      const double v = objective(phi);
      if (v < best) {
        best = v;
        best_phi = phi;
      }
    }
    lo = best_phi - 2.0 * step;
    hi = best_phi + 2.0 * step;
    points = 256;
  }
  return {std::cos(best_phi), std::sin(best_phi)};
}

}  // namespace

TEST_CASE("per-round exploration certificate", "[acceptance][c1]") {
  Stopwatch watch;
  CertificateConfig cfg;
  cfg.trials = 1000000;
  cfg.k_min = 2;
  cfg.k_max = 10;
  cfg.gamma_min = 1.0;
  cfg.gamma_max = 1000.0;
  cfg.mu_factor = 1.0;  // mu = K: checked bound is exactly 2K/gamma
  cfg.tolerance = 1e-9;
  cfg.seed = 2024;
  const CertificateReport rep = verify_certificate(cfg);
  const double elapsed = watch.seconds();

  const bool pass = rep.certificate_holds && rep.violations.empty() && elapsed < 60.0;
  std::ostringstream detail;
  detail << rep.trials << " instances, worst margin " << rep.worst_margin << ", "
         << rep.violations.size() << " violations, " << elapsed << " s";
  report(1, "objective <= 2K/gamma + 1e-9 on 1e6 random instances", pass, detail.str());
  REQUIRE(rep.certificate_holds);
  REQUIRE(rep.violations.empty());
  REQUIRE(elapsed < 60.0);
}

TEST_CASE("adversarial lower construction", "[acceptance][c2]") {
  bool pass = true;
  double worst_gap = 0.0;
  for (int k = 2; k <= 10; ++k) {
    for (double gamma : {2.0, 10.0, 100.0}) {
      const PerRoundInstance inst = lower_bound_instance(k, gamma);
      const auto dist = inverse_gap_distribution(inst.yhat, ExplorationParams(gamma, k));
      const double objective = per_round_objective(inst, dist.probs);
      const double floor = (1.0 - 1.0 / k) / gamma;
      worst_gap = std::max(worst_gap, std::abs(objective - floor));
      if (!(objective >= floor - 1e-15)) pass = false;
      if (std::abs(objective - floor) > 1e-12 * std::max(1.0, floor)) pass = false;
    }
  }
  std::ostringstream detail;
  detail << "K in 2..10, gamma in {2,10,100}; max |objective - (1-1/K)/gamma| = " << worst_gap;
  report(2, "lower construction evaluates to (1-1/K)/gamma at machine precision", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("theorem 1 end to end", "[acceptance][c3]") {
  Stopwatch watch;
  const ExperimentConfig full = theorem1_config(10000);
  const RunSummary s_full = execute_experiment(full).summary;
  const RunSummary s_half = execute_experiment(theorem1_config(2500)).summary;
  const double elapsed = watch.seconds();

  const double expected_budget = 2.0 * std::log(20.0);
  REQUIRE(s_full.budget == expected_budget);  // finite-class budget is exact
  REQUIRE(*s_full.bound == Approx(theorem1_bound(5, 10000, expected_budget, 0.05)));

  int satisfied = 0;
  for (const auto& o : s_full.per_seed) satisfied += o.bound_satisfied ? 1 : 0;
  const double ratio = s_full.mean_regret / s_half.mean_regret;

  const bool pass_bound = satisfied >= 38;
  const bool pass_ratio = ratio < 2.0;
  const bool pass_time = elapsed < 300.0;
  std::ostringstream detail;
  detail << "bound " << *s_full.bound << " satisfied " << satisfied << "/40; mean regret "
         << s_full.mean_regret << " at T=1e4 vs " << s_half.mean_regret
         << " at T=2500, ratio " << ratio << " (need < 2); " << elapsed << " s";
  if (!pass_ratio)
    detail << " | ratio clause fails structurally: with mu=K the per-round exploration cost "
              "1/(mu+gamma*gap) falls by less than half when gamma doubles from "
           << s_half.rate_parameter << " to " << s_full.rate_parameter
           << ", so the 4x-horizon regret ratio stays above 2 at this scale";
  report(3, "Theorem 1 finite-class bound and sublinear growth", pass_bound && pass_ratio && pass_time,
         detail.str());
  REQUIRE(pass_bound);
  REQUIRE(pass_time);
  REQUIRE(pass_ratio);
}

TEST_CASE("aggregating oracle adversarial regret", "[acceptance][c4]") {
  Stopwatch watch;
  const int class_size = 50;
  const long long horizon = 10000;
  const double budget = 2.0 * std::log(static_cast<double>(class_size)) + 1e-6;

  struct ConstantHypothesis {
    double c = 0.0;
    double operator()(const Context&, int) const { return c; }
  };
  std::vector<ConstantHypothesis> cls(class_size);
  for (int i = 0; i < class_size; ++i) cls[i].c = static_cast<double>(i) / (class_size - 1);

  bool pass = true;
  double worst = -1e300;
  for (int run = 0; run < 100; ++run) {
    AggregatingOracle<ConstantHypothesis> oracle(cls);
    SplitRng rng = SplitRng(500 + run).stream("sequence");
    const double level = rng.uniform();
    std::vector<double> comparator(class_size, 0.0);
    double own = 0.0;
    for (long long t = 0; t < horizon; ++t) {
      const double yhat = oracle.predict(Context{}, 0);
      double y = 0.0;
      switch (run % 4) {
        case 0: y = yhat <= 0.5 ? 1.0 : 0.0; break;                    // adaptive worst case
        case 1: y = rng.bernoulli(level) ? 1.0 : 0.0; break;           // random binary
        case 2: y = (t / 1000) % 2 == 0 ? level : 1.0 - level; break;  // block shifts
        default: y = rng.uniform(); break;                             // arbitrary reals
      }
      own += (yhat - y) * (yhat - y);
      for (int i = 0; i < class_size; ++i) {
        const double d = cls[i].c - y;
        comparator[i] += d * d;
      }
      oracle.update(Example{Context{}, 0, y});
    }
    const double regret = own - *std::min_element(comparator.begin(), comparator.end());
    worst = std::max(worst, regret);
    if (regret > budget) pass = false;
  }
  std::ostringstream detail;
  detail << "100 sequences of length 1e4, |F|=50: worst regret " << worst << " vs 2 ln 50 = "
         << 2.0 * std::log(50.0) << "; " << watch.seconds() << " s";
  report(4, "aggregating square-loss regret <= 2 ln|F| + 1e-6 on every sequence", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("vaw rate against a batch least-squares oracle", "[acceptance][c5]") {
  const int dim = 5;
  const long long horizon = 5000;
  const double ridge = 1.0;
  VawOracle vaw(dim, ridge);

  SplitRng rng = SplitRng(77).stream("stream");
  // theta* = (v, 0.5 sqrt(2)) with ||v|| = 0.35: realizable means in [0.25, 0.75]
  Vec theta_star(dim, 0.0);
  {
    Vec v = FeatureEnv::sample_ball(dim - 1, rng);
    const double n = norm2(v);
    if (n > 0) scale(v, 0.35 / n);
    for (int i = 0; i + 1 < dim; ++i) theta_star[i] = v[i];
    theta_star[dim - 1] = 0.5 * std::sqrt(2.0);
  }

  Eigen::MatrixXd xs(horizon, dim);
  Eigen::VectorXd ys(horizon);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(dim, dim) * ridge;
  Eigen::VectorXd moment = Eigen::VectorXd::Zero(dim);

  double own_loss = 0.0;
  double worst_disagreement = 0.0;
  const double inv = 1.0 / std::sqrt(2.0);
  for (long long t = 0; t < horizon; ++t) {
    const Vec u = FeatureEnv::sample_ball(dim - 1, rng);
    Vec x(dim);
    for (int i = 0; i + 1 < dim; ++i) x[i] = u[i] * inv;
    x[dim - 1] = inv;
    const double mean = dot(theta_star, x);
    const double noise = clip(0.1 * rng.gaussian(), -0.24, 0.24);
    const double y = clip01(mean + noise);

    // incremental vs direct query-augmented solve
    Eigen::VectorXd q(dim);
    for (int i = 0; i < dim; ++i) q[i] = x[i];
    const double incremental = vaw.predict_raw(x);
    const Eigen::MatrixXd aug = gram + q * q.transpose();
    const double direct = q.dot(aug.ldlt().solve(moment));
    worst_disagreement =
        std::max(worst_disagreement, std::abs(incremental - direct) / std::max(1.0, std::abs(direct)));

    const double pred = vaw.predict(x);
    own_loss += (pred - y) * (pred - y);
    vaw.update(x, y);
    gram += q * q.transpose();
    moment += y * q;
    xs.row(t) = q.transpose();
    ys[t] = y;
  }

  // brute-force comparator: unconstrained least squares on the whole stream
  const Eigen::VectorXd theta_ls = (xs.transpose() * xs).ldlt().solve(xs.transpose() * ys);
  const double comparator_loss = (xs * theta_ls - ys).squaredNorm();
  const double regret = own_loss - comparator_loss;
  const double envelope = 4.0 * dim * std::log(static_cast<double>(horizon));

  const bool pass = regret <= envelope && worst_disagreement <= 1e-8;
  std::ostringstream detail;
  detail << "cumulative regret " << regret << " vs envelope 4 d ln T = " << envelope
         << "; worst incremental-vs-direct relative error " << worst_disagreement;
  report(5, "VAW regret <= 4 d ln T with 1e-8 solver agreement", pass, detail.str());
  REQUIRE(regret <= envelope);
  REQUIRE(worst_disagreement <= 1e-8);
}

TEST_CASE("sigma-norm projection against the grid oracle", "[acceptance][c6]") {
  SplitRng rng = SplitRng(88).stream("projection");
  bool pass = true;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Mat sigma(2);
    const double b00 = rng.uniform(-2.0, 2.0), b01 = rng.uniform(-2.0, 2.0);
    const double b10 = rng.uniform(-2.0, 2.0), b11 = rng.uniform(-2.0, 2.0);
    sigma(0, 0) = b00 * b00 + b01 * b01 + 0.05;
    sigma(0, 1) = sigma(1, 0) = b00 * b10 + b01 * b11;
    sigma(1, 1) = b10 * b10 + b11 * b11 + 0.05;
    // targets strictly outside the ball so the sphere search applies
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    const double radius = rng.uniform(1.05, 3.0);
    const Vec target = {radius * std::cos(angle), radius * std::sin(angle)};

    const Vec mine = project_sigma_norm(sigma, target);
    const Vec grid = circle_grid_projection(sigma, target);
    const double err = std::max(std::abs(mine[0] - grid[0]), std::abs(mine[1] - grid[1]));
    worst = std::max(worst, err);
    if (err > 1e-4) pass = false;
  }
  std::ostringstream detail;
  detail << "100 random d=2 projections, worst coordinate error " << worst;
  report(6, "Newton-GLM sigma-norm projection matches the grid oracle to 1e-4", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("theorem 6 misspecified pseudo-regret", "[acceptance][c7]") {
  const RunSummary s = execute_experiment(theorem6_config()).summary;
  const double budget = 2.0 * std::log(20.0);
  const double envelope = theorem6_bound(4, 10000, budget, 0.05);
  REQUIRE(*s.bound == Approx(envelope));
  REQUIRE(s.bound_metric == "pseudo");

  double mean_pseudo = 0.0;
  for (const auto& o : s.per_seed) mean_pseudo += o.pseudo;
  mean_pseudo /= static_cast<double>(s.per_seed.size());

  const bool pass = mean_pseudo <= envelope;
  std::ostringstream detail;
  detail << "mean pseudo-regret " << mean_pseudo << " vs 2 sqrt(KT RegSq) + 4 eps sqrt(K) T = "
         << envelope;
  report(7, "Theorem 6 misspecified envelope across 40 seeds", pass, detail.str());
  REQUIRE(pass);
}

TEST_CASE("theorem 8 ball variant", "[acceptance][c8]") {
  // end-to-end runs
  const RunSummary s = execute_experiment(theorem8_config()).summary;
  int satisfied = 0;
  for (const auto& o : s.per_seed) satisfied += o.bound_satisfied ? 1 : 0;
  const bool pass_runs = satisfied >= 38;

  // closed-form moments vs Monte-Carlo at 1e5 draws
  bool pass_moments = true;
  {
    const Vec yhat = {0.5, 0.0, -0.3};
    const double beta = 0.12;
    const MomentPair m = ball_moments(yhat, beta);
    SplitRng rng = SplitRng(4096).stream("moments");
    const int n = 100000;
    Vec mean(3, 0.0);
    Mat second(3);
    for (int i = 0; i < n; ++i) {
      const Vec a = ball_sample(yhat, beta, rng);
      for (int j = 0; j < 3; ++j) mean[j] += a[j];
      second.rank1_update(a);
    }
    for (int j = 0; j < 3 && pass_moments; ++j) {
      mean[j] /= n;
      const double tol = 3.0 * std::sqrt(std::max(1e-12, m.second_moment(j, j)) / n) + 1e-6;
      if (std::abs(mean[j] - m.mean[j]) > tol) pass_moments = false;
      for (int k = 0; k < 3; ++k) {
        const double emp = second(j, k) / n;
        if (std::abs(emp - m.second_moment(j, k)) > 3.0 / std::sqrt(static_cast<double>(n)) + 1e-6)
          pass_moments = false;
      }
    }
  }

  // exact per-round certificate on 1e4 random instances
  bool pass_certificate = true;
  double worst_margin = -1e300;
  {
    SplitRng rng = SplitRng(8192).stream("certificate");
    for (int trial = 0; trial < 10000; ++trial) {
      const int d = 1 + rng.uniform_int(6);
      Vec yhat(d);
      for (double& v : yhat) v = rng.uniform(-1.0, 1.0);
      if (trial % 13 == 0) std::fill(yhat.begin(), yhat.end(), 0.0);
      const Vec fstar = FeatureEnv::sample_ball(d, rng);
      const double beta = rng.uniform(1e-3, 0.5);
      const double regret = ball_instant_regret(ball_moments(yhat, beta), fstar);
      const double certificate = ball_certificate(yhat, fstar, beta);
      worst_margin = std::max(worst_margin, regret - certificate);
      if (regret > certificate + 1e-9) pass_certificate = false;
    }
  }

  const bool pass = pass_runs && pass_moments && pass_certificate;
  std::ostringstream detail;
  detail << "bound " << *s.bound << " satisfied " << satisfied << "/40 (mean regret " << s.mean_regret
         << "); moments 3-sigma at 1e5 draws " << (pass_moments ? "ok" : "violated")
         << "; certificate worst margin " << worst_margin << " over 1e4 instances";
  report(8, "Theorem 8 ball bound, Monte-Carlo moments, per-round certificate", pass, detail.str());
  REQUIRE(pass_runs);
  REQUIRE(pass_moments);
  REQUIRE(pass_certificate);
}

TEST_CASE("gap family keeps the sqrt(T) floor", "[acceptance][c9]") {
  Stopwatch watch;
  const GapSweepResult sweep = run_gap_sweep();
  const double elapsed = watch.seconds();
  const double floor = 0.05 * std::sqrt(3200.0);

  const bool pass = sweep.max_mean_regret >= floor && elapsed < 600.0;
  std::ostringstream detail;
  detail << "81 instances x 20 seeds: max mean realized regret " << sweep.max_mean_regret
         << " at instance " << sweep.argmax_instance << " vs floor 0.05 sqrt(T) = " << floor << "; "
         << elapsed << " s";
  report(9, "constant-gap family forces sqrt(T)-scale regret", pass, detail.str());
  REQUIRE(sweep.max_mean_regret >= floor);
  REQUIRE(elapsed < 600.0);
}

TEST_CASE("deterministic replay of every experiment", "[acceptance][c10]") {
  bool pass = true;
  std::ostringstream detail;

  const std::vector<ExperimentConfig> configs = {theorem1_config(10000), theorem1_config(2500),
                                                 theorem6_config(), theorem8_config()};
  for (const auto& cfg : configs) {
    const ExperimentOutput a = execute_experiment(cfg);
    const ExperimentOutput b = execute_experiment(cfg);
    bool same = a.ledgers.size() == b.ledgers.size();
    for (std::size_t i = 0; same && i < a.ledgers.size(); ++i)
      same = a.ledgers[i].first == b.ledgers[i].first && a.ledgers[i].second == b.ledgers[i].second;
    detail << cfg.name << "@T=" << cfg.horizon << " " << (same ? "identical" : "DIVERGED") << "; ";
    if (!same) pass = false;
  }

  const GapSweepResult g1 = run_gap_sweep();
  const GapSweepResult g2 = run_gap_sweep();
  const bool gap_same = g1.ledger_hashes == g2.ledger_hashes && !g1.ledger_hashes.empty();
  detail << "gap sweep (1620 ledgers) " << (gap_same ? "identical" : "DIVERGED");
  if (!gap_same) pass = false;

  report(10, "byte-identical ledgers on identical configs", pass, detail.str());
  REQUIRE(pass);
}
