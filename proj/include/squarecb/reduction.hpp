#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "squarecb/linalg.hpp"
#include "squarecb/oracle.hpp"
#include "squarecb/rng.hpp"

namespace squarecb {

struct ExplorationParams {
  double gamma = 1.0;
  double mu = 0.0;  // defaults to K when left at 0
  int arms = 2;

  ExplorationParams(double gamma_, int arms_, double mu_ = 0.0)
      : gamma(gamma_), mu(mu_ == 0.0 ? static_cast<double>(arms_) : mu_), arms(arms_) {
    if (arms < 2) throw std::invalid_argument("exploration params: need at least two arms");
    if (!(gamma > 0.0)) throw std::invalid_argument("exploration params: gamma must be positive");
    // mu below K-1 can push the greedy arm's probability negative
    if (mu < arms - 1) throw std::invalid_argument("exploration params: mu must be at least K-1");
  }
};

struct ActionDistribution {
  std::vector<double> probs;
  int greedy_arm = 0;
};

// Inverse-gap weighting: the greedy arm is the score argmin (ties to the
// lowest index), every other arm gets probability 1/(mu + gamma * gap).
inline ActionDistribution inverse_gap_distribution(std::span<const double> scores,
                                                   const ExplorationParams& params) {
  const int k = static_cast<int>(scores.size());
  if (k != params.arms) throw std::invalid_argument("inverse_gap_distribution: score count != K");
  for (double s : scores)
    if (!(s >= 0.0 && s <= 1.0))
      throw std::invalid_argument("inverse_gap_distribution: scores must lie in [0,1]");

  ActionDistribution dist;
  dist.probs.assign(k, 0.0);
  int b = 0;
  for (int a = 1; a < k; ++a)
    if (scores[a] < scores[b]) b = a;
  dist.greedy_arm = b;

  double off_mass = 0.0;
  for (int a = 0; a < k; ++a) {
    if (a == b) continue;
    dist.probs[a] = 1.0 / (params.mu + params.gamma * (scores[a] - scores[b]));
    off_mass += dist.probs[a];
  }
  dist.probs[b] = 1.0 - off_mass;
  return dist;
}

// gamma = sqrt(KT / (RegSq + log(2/delta)))
inline double tune_gamma_realizable(int arms, long long horizon, const OracleRegretBudget& budget,
                                    double delta) {
  if (horizon <= 0) throw std::invalid_argument("tune_gamma_realizable: horizon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("tune_gamma_realizable: delta in (0,1)");
  return std::sqrt(static_cast<double>(arms) * static_cast<double>(horizon) /
                   (budget.bound + std::log(2.0 / delta)));
}

enum class AdversaryModel { stochastic, adaptive };

// stochastic: 2 sqrt(KT/(RegSq + eps^2 T)); adaptive: sqrt(8KT/(RegSq + eps^2 T))
inline double tune_gamma_misspecified(int arms, long long horizon, const OracleRegretBudget& budget,
                                      double eps, AdversaryModel adversary) {
  if (horizon <= 0) throw std::invalid_argument("tune_gamma_misspecified: horizon must be positive");
  if (!(eps >= 0.0)) throw std::invalid_argument("tune_gamma_misspecified: eps must be nonnegative");
  const double kt = static_cast<double>(arms) * static_cast<double>(horizon);
  const double denom = budget.bound + eps * eps * static_cast<double>(horizon);
  if (!(denom > 0.0)) throw std::invalid_argument("tune_gamma_misspecified: zero regret budget and eps");
  return adversary == AdversaryModel::stochastic ? 2.0 * std::sqrt(kt / denom)
                                                 : std::sqrt(8.0 * kt / denom);
}

inline double theorem1_bound(int arms, long long horizon, double reg_sq, double delta) {
  const double kt = static_cast<double>(arms) * static_cast<double>(horizon);
  return 4.0 * std::sqrt(kt * reg_sq) + 8.0 * std::sqrt(kt * std::log(2.0 / delta));
}

inline double theorem6_bound(int arms, long long horizon, double reg_sq, double eps) {
  const double kt = static_cast<double>(arms) * static_cast<double>(horizon);
  return 2.0 * std::sqrt(kt * reg_sq) +
         eps * 4.0 * std::sqrt(static_cast<double>(arms)) * static_cast<double>(horizon);
}

inline double theorem7_bound(int arms, long long horizon, double reg_sq, double eps) {
  const double kt = static_cast<double>(arms) * static_cast<double>(horizon);
  return std::sqrt(2.0 * kt * reg_sq) +
         eps * std::sqrt(2.0 * static_cast<double>(arms)) * static_cast<double>(horizon);
}

// ---------------------------------------------------------------------------
// Regret ledger
// ---------------------------------------------------------------------------

struct LedgerRow {
  long long round = 0;
  std::string arm;
  double loss = 0.0;
  double realized_cum = 0.0;
  double pseudo_cum = 0.0;
  double p_chosen = 0.0;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RegretLedger {
  std::vector<LedgerRow> rows;
  double realized_regret = 0.0;
  double pseudo_regret = 0.0;
  long long clip_warnings = 0;

  static constexpr const char* csv_header = "round,arm,loss,realized_regret_cum,pseudo_regret_cum,p_chosen";

  void write_csv(std::ostream& out) const {
    out << csv_header << '\n';
    for (const LedgerRow& r : rows) {
      out << r.round << ',' << r.arm << ',' << format_double(r.loss) << ','
          << format_double(r.realized_cum) << ',' << format_double(r.pseudo_cum) << ','
          << format_double(r.p_chosen) << '\n';
    }
  }

  // cumulative realized regret after the given round (rows are 1-based)
  double realized_at(long long round) const {
    if (rows.empty() || round < 1) return 0.0;
    const std::size_t idx = std::min<std::size_t>(rows.size(), static_cast<std::size_t>(round)) - 1;
    return rows[idx].realized_cum;
  }
};

// ---------------------------------------------------------------------------
// The bandit loop
// ---------------------------------------------------------------------------

template <class E>
concept FiniteActionEnv = requires(const E ce, E e, long long t, SplitRng& rng, const Context& x, int a) {
  { ce.arms() } -> std::convertible_to<int>;
  { e.context(t, rng) } -> std::convertible_to<Context>;
  { e.sample_losses(x, rng) } -> std::convertible_to<std::vector<double>>;
  { ce.true_mean(x, a) } -> std::convertible_to<double>;
  { ce.best_arm(x) } -> std::convertible_to<int>;
};

namespace detail {

// Shared per-round bookkeeping for the finite-action runners.
template <class Env>
void record_round(const Env& env, const Context& x, int arm, const std::vector<double>& losses,
                  double p_chosen, long long t, RegretLedger& ledger) {
  const int star = env.best_arm(x);
  ledger.realized_regret += losses[arm] - losses[star];
  ledger.pseudo_regret += env.true_mean(x, arm) - env.true_mean(x, star);
  ledger.rows.push_back({t, std::to_string(arm), losses[arm], ledger.realized_regret,
                         ledger.pseudo_regret, p_chosen});
}

}  // namespace detail

// One SquareCB run: predict scores for every arm, form the inverse-gap
// distribution, sample, observe the chosen arm's loss, and feed exactly that
// tuple back to the oracle. Oracle scores outside [0,1] are clipped at the
// reduction boundary and counted.
template <class Oracle, class Env>
  requires FiniteActionOracle<Oracle> && FiniteActionEnv<Env>
RegretLedger run_squarecb(Env& env, Oracle& oracle, const ExplorationParams& params, long long horizon,
                          std::uint64_t seed) {
  if (env.arms() != params.arms) throw std::invalid_argument("run_squarecb: env arm count != params");
  if (horizon <= 0) throw std::invalid_argument("run_squarecb: horizon must be positive");

  SplitRng root(seed);
  SplitRng ctx_rng = root.stream("env/context");
  SplitRng loss_rng = root.stream("env/loss");
  SplitRng act_rng = root.stream("policy/action");

  const int k = params.arms;
  RegretLedger ledger;
  ledger.rows.reserve(static_cast<std::size_t>(horizon));
  std::vector<double> scores(k);

  for (long long t = 1; t <= horizon; ++t) {
    const Context x = env.context(t, ctx_rng);
    for (int a = 0; a < k; ++a) {
      double s = oracle.predict(x, a);
      if (s < 0.0 || s > 1.0) {
        ++ledger.clip_warnings;
        s = clip01(s);
      }
      scores[a] = s;
    }
    const ActionDistribution dist = inverse_gap_distribution(scores, params);
    const int arm = act_rng.sample_discrete(dist.probs);
    const std::vector<double> losses = env.sample_losses(x, loss_rng);
    detail::record_round(env, x, arm, losses, dist.probs[arm], t, ledger);
    oracle.update(Example{x, arm, losses[arm]});
  }
  return ledger;
}

// Oracle-based epsilon-greedy reference: explore uniformly with probability
// eps_t = min(1, (K/t)^{1/3}), otherwise play the oracle's greedy arm.
template <class Oracle, class Env>
  requires FiniteActionOracle<Oracle> && FiniteActionEnv<Env>
RegretLedger run_epsilon_greedy(Env& env, Oracle& oracle, long long horizon, std::uint64_t seed) {
  if (horizon <= 0) throw std::invalid_argument("run_epsilon_greedy: horizon must be positive");

  SplitRng root(seed);
  SplitRng ctx_rng = root.stream("env/context");
  SplitRng loss_rng = root.stream("env/loss");
  SplitRng act_rng = root.stream("policy/action");

  const int k = env.arms();
  RegretLedger ledger;
  ledger.rows.reserve(static_cast<std::size_t>(horizon));

  for (long long t = 1; t <= horizon; ++t) {
    const Context x = env.context(t, ctx_rng);
    int greedy = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < k; ++a) {
      const double s = oracle.predict(x, a);
      if (s < best) {
        best = s;
        greedy = a;
      }
    }
    const double eps = std::min(1.0, std::cbrt(static_cast<double>(k) / static_cast<double>(t)));
    const bool explore = act_rng.bernoulli(eps);
    const int uniform_arm = act_rng.uniform_int(k);  // drawn every round to keep draw counts fixed
    const int arm = explore ? uniform_arm : greedy;
    const double p_chosen = eps / k + (arm == greedy ? 1.0 - eps : 0.0);
    const std::vector<double> losses = env.sample_losses(x, loss_rng);
    detail::record_round(env, x, arm, losses, p_chosen, t, ledger);
    oracle.update(Example{x, arm, losses[arm]});
  }
  return ledger;
}

}  // namespace squarecb
