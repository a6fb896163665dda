#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "squarecb/linalg.hpp"
#include "squarecb/oracle.hpp"

namespace squarecb {

// Projected online gradient descent on the squared loss over the unit ball.
// Step size: explicit eta if given, else 1/sqrt(T) for a known horizon,
// else the anytime schedule 1/sqrt(t).
class OgdOracle {
 public:
  struct Options {
    std::optional<double> step;
    std::optional<long long> horizon;
  };

  explicit OgdOracle(int dim, Options opts = {}) : dim_(dim), opts_(opts), theta_(dim, 0.0) {
    if (dim <= 0) throw std::invalid_argument("ogd: dimension must be positive");
    if (opts_.step && !(*opts_.step > 0.0)) throw std::invalid_argument("ogd: step must be positive");
    if (opts_.horizon && *opts_.horizon <= 0) throw std::invalid_argument("ogd: horizon must be positive");
  }

  const Vec& theta() const { return theta_; }

  double predict_raw(std::span<const double> x) const {
    check_dim(x);
    return dot(theta_, x);
  }
  double predict(std::span<const double> x) const { return clip01(predict_raw(x)); }
  double predict(const Context& ctx, int arm) const { return predict(ctx.features(arm)); }

  void update(std::span<const double> x, double y) {
    check_outcome(y);
    check_dim(x);
    ++steps_;
    const double eta = step_size();
    const double g = 2.0 * (dot(theta_, x) - y);
    axpy(-eta * g, x, theta_);
    project_ball(theta_);
  }

  void update(const Example& ex) { update(ex.context.features(ex.arm), ex.outcome); }

  OracleRegretBudget budget(long long horizon) const { return ogd_budget(horizon); }
  static constexpr OracleGuarantee guarantee() { return OracleGuarantee::adversarial_regret; }

 private:
  double step_size() const {
    if (opts_.step) return *opts_.step;
    if (opts_.horizon) return 1.0 / std::sqrt(static_cast<double>(*opts_.horizon));
    return 1.0 / std::sqrt(static_cast<double>(steps_));
  }

  void check_dim(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_)
      throw std::invalid_argument("ogd: feature dimension mismatch");
  }

  int dim_;
  Options opts_;
  Vec theta_;
  long long steps_ = 0;
};

}  // namespace squarecb
