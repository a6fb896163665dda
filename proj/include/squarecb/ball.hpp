#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "squarecb/environments.hpp"
#include "squarecb/linalg.hpp"
#include "squarecb/reduction.hpp"
#include "squarecb/rng.hpp"
#include "squarecb/vaw.hpp"

namespace squarecb {

// alpha = min(beta / ||yhat||, 1/2); alpha = 1/2 when yhat = 0.
inline double ball_exploration_rate(double yhat_norm, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("ball: beta must be positive");
  if (yhat_norm <= 0.0) return 0.5;
  return std::min(beta / yhat_norm, 0.5);
}

// Exploit direction: -yhat/||yhat||, falling back to -e1 for yhat = 0.
inline Vec ball_exploit_direction(std::span<const double> yhat) {
  Vec dir(yhat.begin(), yhat.end());
  const double n = norm2(dir);
  if (n > 0.0) {
    scale(dir, -1.0 / n);
  } else {
    std::fill(dir.begin(), dir.end(), 0.0);
    dir[0] = -1.0;
  }
  return dir;
}

// One action draw: with probability 1-alpha play the exploit direction,
// otherwise a uniformly random signed basis vector. Both branches emit unit
// vectors.
inline Vec ball_sample(std::span<const double> yhat, double beta, SplitRng& rng,
                       double* p_chosen = nullptr) {
  const int d = static_cast<int>(yhat.size());
  if (d < 1) throw std::invalid_argument("ball: empty prediction vector");
  const double alpha = ball_exploration_rate(norm2(yhat), beta);
  const bool explore = rng.bernoulli(alpha);
  const int coord = rng.uniform_int(d);          // drawn every round: fixed draw count
  const bool negative = rng.bernoulli(0.5);
  if (!explore) {
    if (p_chosen) *p_chosen = 1.0 - alpha;
    return ball_exploit_direction(yhat);
  }
  if (p_chosen) *p_chosen = alpha / (2.0 * d);
  Vec a(d, 0.0);
  a[coord] = negative ? -1.0 : 1.0;
  return a;
}

struct MomentPair {
  Vec mean;
  Mat second_moment;
  double alpha = 0.0;
};

// Closed-form action moments: mean = -(1-alpha) ytilde,
// second moment = (1-alpha) ytilde ytilde^T + (alpha/d) I.
inline MomentPair ball_moments(std::span<const double> yhat, double beta) {
  const int d = static_cast<int>(yhat.size());
  if (d < 1) throw std::invalid_argument("ball: empty prediction vector");
  MomentPair m;
  m.alpha = ball_exploration_rate(norm2(yhat), beta);
  Vec ytilde = ball_exploit_direction(yhat);
  scale(ytilde, -1.0);  // back to +yhat direction (or e1 fallback)
  m.mean = ytilde;
  scale(m.mean, -(1.0 - m.alpha));
  m.second_moment = Mat(d, m.alpha / d);
  m.second_moment.rank1_update(ytilde, 1.0 - m.alpha);
  return m;
}

// beta = sqrt(d (RegSq + 8 log(1/delta)) / T)
inline double tune_beta(int dim, long long horizon, const OracleRegretBudget& budget, double delta) {
  if (horizon <= 0) throw std::invalid_argument("tune_beta: horizon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("tune_beta: delta in (0,1)");
  return std::sqrt(static_cast<double>(dim) * (budget.bound + 8.0 * std::log(1.0 / delta)) /
                   static_cast<double>(horizon));
}

inline double theorem8_bound(int dim, long long horizon, double reg_sq, double delta) {
  const double dt = static_cast<double>(dim) * static_cast<double>(horizon);
  return 18.0 * std::sqrt(dt * reg_sq) + 90.0 * std::sqrt(dt * std::log(1.0 / delta));
}

// Exact instantaneous expected regret under the action distribution:
// max_{a* in ball} E[<f,a>] - <f,a*> = <f, mean> + ||f||.
inline double ball_instant_regret(const MomentPair& m, std::span<const double> fstar) {
  return dot(m.mean, fstar) + norm2(fstar);
}

// Per-round certificate value 9 beta + (4d/beta) ||yhat - f*||_Sigma^2.
inline double ball_certificate(std::span<const double> yhat, std::span<const double> fstar,
                               double beta) {
  const int d = static_cast<int>(yhat.size());
  const MomentPair m = ball_moments(yhat, beta);
  Vec diff(yhat.begin(), yhat.end());
  axpy(-1.0, fstar, diff);
  return 9.0 * beta + (4.0 * d / beta) * m.second_moment.quad_form(diff);
}

inline std::string format_action(std::span<const double> a) {
  std::ostringstream out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) out << ';';
    out << format_double(a[i]);
  }
  return out.str();
}

template <class O>
concept BallOracle = requires(O o, const O co, std::span<const double> a, double raw_loss) {
  { co.prediction_vector() } -> std::convertible_to<Vec>;
  o.observe(a, raw_loss);
};

// VAW behind the vector-prediction contract yhat(x,a) = <yhat, a>. Raw
// losses in [-1,1] are affinely mapped to [0,1] for the forecaster; an
// intercept feature absorbs the offset so the target stays exactly linear,
// and the prediction vector is mapped back to the raw scale.
class BallVawOracle {
 public:
  explicit BallVawOracle(int action_dim, double ridge = 1.0)
      : dim_(action_dim), vaw_(action_dim + 1, ridge) {
    if (action_dim < 1) throw std::invalid_argument("ball vaw: action dimension must be positive");
  }

  int action_dim() const { return dim_; }
  const VawOracle& forecaster() const { return vaw_; }

  Vec prediction_vector() const {
    const Vec w = vaw_.parameter();
    Vec out(dim_);
    for (int i = 0; i < dim_; ++i) out[i] = 2.0 * w[i];
    return out;
  }

  void observe(std::span<const double> action, double raw_loss) {
    if (static_cast<int>(action.size()) != dim_)
      throw std::invalid_argument("ball vaw: action dimension mismatch");
    Vec features(action.begin(), action.end());
    features.push_back(1.0);
    vaw_.update(features, clip01(0.5 * (raw_loss + 1.0)));
  }

  OracleRegretBudget budget(long long horizon) const { return vaw_budget(dim_, horizon); }

 private:
  int dim_;
  VawOracle vaw_;
};

// The unit-ball reduction loop. Ledger regrets are on the raw loss scale;
// realized regret compares against the optimal action under the same noise
// draw, pseudo-regret against min_{a in ball} <theta*, a>.
template <class Oracle>
  requires BallOracle<Oracle>
RegretLedger run_squarecb_hilbert(const BallEnv& env, Oracle& oracle, double beta, long long horizon,
                                  std::uint64_t seed) {
  if (!(beta > 0.0)) throw std::invalid_argument("run_squarecb_hilbert: beta must be positive");
  if (horizon <= 0) throw std::invalid_argument("run_squarecb_hilbert: horizon must be positive");

  SplitRng root(seed);
  SplitRng loss_rng = root.stream("env/loss");
  SplitRng act_rng = root.stream("policy/action");

  const int d = env.dim();
  Vec astar(env.theta_star());
  const double tn = norm2(astar);
  if (tn > 0.0) scale(astar, -1.0 / tn);

  RegretLedger ledger;
  ledger.rows.reserve(static_cast<std::size_t>(horizon));

  for (long long t = 1; t <= horizon; ++t) {
    Vec yhat = oracle.prediction_vector();
    if (static_cast<int>(yhat.size()) != d)
      throw std::invalid_argument("run_squarecb_hilbert: oracle dimension mismatch");
    const double yn = norm2(yhat);
    if (yn > 1.0) {
      ++ledger.clip_warnings;
      scale(yhat, 1.0 / yn);
    }
    double p_chosen = 0.0;
    const Vec action = ball_sample(yhat, beta, act_rng, &p_chosen);
    const double loss = env.raw_loss(action, loss_rng);
    const double loss_star = env.raw_loss(astar, loss_rng);
    ledger.realized_regret += loss - loss_star;
    ledger.pseudo_regret += env.true_mean(action) - env.optimal_value();
    ledger.rows.push_back({t, format_action(action), loss, ledger.realized_regret,
                           ledger.pseudo_regret, p_chosen});
    oracle.observe(action, loss);
  }
  return ledger;
}

}  // namespace squarecb
