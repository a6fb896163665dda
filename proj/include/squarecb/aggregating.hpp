#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "squarecb/linalg.hpp"
#include "squarecb/oracle.hpp"

namespace squarecb {

// Square-loss substitution: given the mixture loss bounds at the endpoint
// outcomes, predict the midpoint shift. Satisfies (yhat-y)^2 <= delta(y) for
// every y in [0,1] when eta <= 1/2 (checked by the grid-dominance tests).
inline double aggregating_substitution(double delta0, double delta1) {
  if (!std::isfinite(delta0) || !std::isfinite(delta1))
    throw std::runtime_error("aggregating_substitution: non-finite mixture losses");
  return clip01(0.5 * (1.0 + delta0 - delta1));
}

// Hypothesis over an enumerated context set: a table of values f(x,a).
struct TableHypothesis {
  int arms = 0;
  Vec values;  // n_contexts x arms, row major

  double operator()(const Context& x, int arm) const {
    return values[static_cast<std::size_t>(x.id) * arms + arm];
  }
};

// Exponential-weights forecaster for square loss over a finite class,
// with log-domain posterior and the substitution rule above.
template <class Hypothesis>
class AggregatingOracle {
 public:
  explicit AggregatingOracle(std::vector<Hypothesis> hypotheses, double eta = 0.5)
      : hypotheses_(std::move(hypotheses)), eta_(eta), log_w_(hypotheses_.size(), 0.0) {
    if (hypotheses_.empty()) throw std::invalid_argument("aggregating oracle needs a nonempty class");
    if (!(eta_ > 0.0)) throw std::invalid_argument("aggregating learning rate must be positive");
    values_.resize(hypotheses_.size());
  }

  std::size_t class_size() const { return hypotheses_.size(); }
  const std::vector<Hypothesis>& hypotheses() const { return hypotheses_; }
  const std::vector<double>& log_weights() const { return log_w_; }
  double eta() const { return eta_; }

  // -(1/eta) log E_{g~P}[exp(-eta (g(z)-y)^2)] for hypothesis values g(z).
  double mixture_delta(std::span<const double> values, double y) const {
    return -(log_sum_exp_shifted(values, y) - log_sum_exp_shifted(values, std::nullopt)) / eta_;
  }

  double predict_values(std::span<const double> values) const {
    return aggregating_substitution(mixture_delta(values, 0.0), mixture_delta(values, 1.0));
  }

  double predict(const Context& x, int arm) const {
    evaluate(x, arm);
    return predict_values(values_);
  }

  void update(const Example& ex) {
    check_outcome(ex.outcome);
    evaluate(ex.context, ex.arm);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < log_w_.size(); ++i) {
      const double d = values_[i] - ex.outcome;
      log_w_[i] -= eta_ * d * d;
      mx = std::max(mx, log_w_[i]);
    }
    // keep the unnormalized posterior anchored at zero
    for (double& w : log_w_) w -= mx;
  }

  OracleRegretBudget budget() const { return finite_class_budget(hypotheses_.size()); }
  static constexpr OracleGuarantee guarantee() { return OracleGuarantee::adversarial_regret; }

 private:
  void evaluate(const Context& x, int arm) const {
    for (std::size_t i = 0; i < hypotheses_.size(); ++i) values_[i] = hypotheses_[i](x, arm);
  }

  // log sum_i exp(log_w_i - eta (v_i - y)^2), or log sum_i exp(log_w_i).
  double log_sum_exp_shifted(std::span<const double> values, std::optional<double> y) const {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < log_w_.size(); ++i) {
      double e = log_w_[i];
      if (y) {
        const double d = values[i] - *y;
        e -= eta_ * d * d;
      }
      mx = std::max(mx, e);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < log_w_.size(); ++i) {
      double e = log_w_[i];
      if (y) {
        const double d = values[i] - *y;
        e -= eta_ * d * d;
      }
      s += std::exp(e - mx);
    }
    return mx + std::log(s);
  }

  std::vector<Hypothesis> hypotheses_;
  double eta_;
  std::vector<double> log_w_;
  mutable Vec values_;
};

}  // namespace squarecb
