#pragma once

#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <vector>

#include "squarecb/linalg.hpp"

namespace squarecb {

// A context as seen by oracles and environments: either an enumerated id
// (tabular classes) or one feature vector per arm (linear / GLM classes).
// Both fields may be set; oracles read the part they understand.
struct Context {
  int id = -1;
  std::vector<Vec> arm_features;

  const Vec& features(int arm) const {
    if (arm < 0 || arm >= static_cast<int>(arm_features.size()))
      throw std::invalid_argument("Context: no feature vector for arm " + std::to_string(arm));
    return arm_features[arm];
  }
};

// One training tuple ((context, action), observed loss).
struct Example {
  Context context;
  int arm = 0;
  double outcome = 0.0;
};

inline void check_outcome(double y) {
  if (!(y >= 0.0 && y <= 1.0))
    throw std::invalid_argument("outcome must lie in [0,1], got " + std::to_string(y));
}

enum class BudgetProvenance {
  finite_class_2lnF,
  vaw_dlogT,
  ogd_sqrtT,
  glmtron_sqrtT,
  newton_glm_dlogT,
  user_supplied,
};

// Which prediction-error guarantee an oracle family carries: an adversarial
// square-loss regret bound, or a realizability-only error bound.
enum class OracleGuarantee { adversarial_regret, realizable_error };

struct OracleRegretBudget {
  double bound = 0.0;
  BudgetProvenance provenance = BudgetProvenance::user_supplied;

  OracleRegretBudget() = default;
  OracleRegretBudget(double b, BudgetProvenance p) : bound(b), provenance(p) {
    if (!(bound >= 0.0)) throw std::invalid_argument("regret budget must be nonnegative");
  }
};

inline OracleRegretBudget finite_class_budget(std::size_t class_size) {
  if (class_size == 0) throw std::invalid_argument("finite class must be nonempty");
  return {2.0 * std::log(static_cast<double>(class_size)), BudgetProvenance::finite_class_2lnF};
}

inline OracleRegretBudget vaw_budget(int dim, long long horizon) {
  if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
  const double d = dim;
  return {d * std::log(std::max(std::exp(1.0), static_cast<double>(horizon) / d)),
          BudgetProvenance::vaw_dlogT};
}

inline OracleRegretBudget ogd_budget(long long horizon) {
  if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
  return {std::sqrt(static_cast<double>(horizon)), BudgetProvenance::ogd_sqrtT};
}

inline OracleRegretBudget glmtron_budget(long long horizon) {
  if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
  return {std::sqrt(static_cast<double>(horizon)), BudgetProvenance::glmtron_sqrtT};
}

inline OracleRegretBudget newton_glm_budget(int dim, long long horizon, double sigma_floor) {
  if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
  if (!(sigma_floor > 0.0)) throw std::invalid_argument("newton budget needs a positive link derivative floor");
  return {dim * std::log(static_cast<double>(horizon)) / (sigma_floor * sigma_floor),
          BudgetProvenance::newton_glm_dlogT};
}

// The predict-then-update contract every finite-action oracle satisfies.
template <class O>
concept FiniteActionOracle = requires(O o, const O co, const Context& x, int arm, const Example& ex) {
  { co.predict(x, arm) } -> std::convertible_to<double>;
  o.update(ex);
};

}  // namespace squarecb
