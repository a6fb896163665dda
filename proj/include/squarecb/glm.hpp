#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "squarecb/linalg.hpp"
#include "squarecb/oracle.hpp"

namespace squarecb {

// Non-decreasing 1-Lipschitz link R -> [0,1], with a declared derivative
// floor over the feasible margin domain [-1,1] (0 when unknown).
struct LinkFunction {
  std::string name;
  std::function<double(double)> sigma;
  double derivative_floor = 0.0;
  std::vector<std::pair<double, double>> knots;  // set for table links

  double operator()(double z) const { return sigma(z); }
};

inline LinkFunction clipped_identity_link() {
  return {"clipped_identity", [](double z) { return clip01(z); }, 0.0, {}};
}

// Rescaled logistic with derivative in [0.25, 0.6] on [-1,1]; keeps the
// 1-Lipschitz property while meeting a positive derivative floor.
inline LinkFunction rescaled_logistic_link() {
  auto sigma = [](double z) {
    const double l = 1.0 / (1.0 + std::exp(-2.0 * z));
    return clip01(0.5 + 1.2 * (l - 0.5));
  };
  return {"logistic", sigma, 0.25, {}};
}

// Piecewise-linear link through user-supplied knots (z, sigma(z)); constant
// extrapolation outside the knot range.
inline LinkFunction table_link(std::vector<std::pair<double, double>> knots, double derivative_floor = 0.0) {
  if (knots.size() < 2) throw std::invalid_argument("table link needs at least two knots");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i].first > knots[i - 1].first))
      throw std::invalid_argument("table link knots must have strictly increasing abscissae");
  auto pts = knots;
  auto sigma = [pts](double z) {
    if (z <= pts.front().first) return pts.front().second;
    if (z >= pts.back().first) return pts.back().second;
    std::size_t i = 1;
    while (pts[i].first < z) ++i;
    const auto& [z0, v0] = pts[i - 1];
    const auto& [z1, v1] = pts[i];
    return v0 + (v1 - v0) * (z - z0) / (z1 - z0);
  };
  return {"table", sigma, derivative_floor, std::move(knots)};
}

// Grid validation of the link contract on [lo,hi]: monotone, 1-Lipschitz,
// range in [0,1], and derivative >= floor when a floor is declared.
inline void validate_link(const LinkFunction& link, int grid_points = 10000, double lo = -1.0,
                          double hi = 1.0) {
  if (grid_points < 2) throw std::invalid_argument("validate_link: grid too small");
  const double step = (hi - lo) / (grid_points - 1);
  const double tol = 1e-9;
  double prev = link(lo);
  for (int i = 1; i < grid_points; ++i) {
    const double z = lo + i * step;
    const double v = link(z);
    if (!(v >= -tol && v <= 1.0 + tol)) throw std::invalid_argument("link range leaves [0,1]");
    if (v < prev - tol) throw std::invalid_argument("link is not non-decreasing");
    if (v - prev > step + tol) throw std::invalid_argument("link is not 1-Lipschitz");
    if (link.derivative_floor > 0.0 && (v - prev) / step < link.derivative_floor - 1e-6)
      throw std::invalid_argument("link derivative drops below the declared floor");
    prev = v;
  }
}

// GLMtron, gradient variant: pseudo-gradient g = 2(sigma(<theta,x>)-y)x,
// projected step onto the unit ball.
class GlmtronOracle {
 public:
  struct Options {
    std::optional<double> step;
    std::optional<long long> horizon;  // step defaults to 1/sqrt(T)
  };

  GlmtronOracle(int dim, LinkFunction link, Options opts = {})
      : dim_(dim), link_(std::move(link)), opts_(opts), theta_(dim, 0.0) {
    if (dim <= 0) throw std::invalid_argument("glmtron: dimension must be positive");
    if (opts_.step && !(*opts_.step > 0.0)) throw std::invalid_argument("glmtron: step must be positive");
  }

  const Vec& theta() const { return theta_; }
  const LinkFunction& link() const { return link_; }

  double predict(std::span<const double> x) const {
    check_features(x);
    return clip01(link_(dot(theta_, x)));
  }
  double predict(const Context& ctx, int arm) const { return predict(ctx.features(arm)); }

  void update(std::span<const double> x, double y) {
    check_outcome(y);
    check_features(x);
    ++steps_;
    const double residual = link_(dot(theta_, x)) - y;
    axpy(-2.0 * step_size() * residual, x, theta_);
    project_ball(theta_);
  }

  void update(const Example& ex) { update(ex.context.features(ex.arm), ex.outcome); }

  OracleRegretBudget budget(long long horizon) const { return glmtron_budget(horizon); }
  static constexpr OracleGuarantee guarantee() { return OracleGuarantee::realizable_error; }

 private:
  double step_size() const {
    if (opts_.step) return *opts_.step;
    if (opts_.horizon) return 1.0 / std::sqrt(static_cast<double>(*opts_.horizon));
    return 1.0 / std::sqrt(static_cast<double>(steps_));
  }

  void check_features(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("glmtron: feature dimension mismatch");
    if (norm2(x) > 1.0 + 1e-9) throw std::invalid_argument("glmtron: feature norm exceeds 1");
  }

  int dim_;
  LinkFunction link_;
  Options opts_;
  Vec theta_;
  long long steps_ = 0;
};

// argmin_{||v||_2 <= 1} ||v - target||_Sigma^2 for positive definite Sigma.
// KKT: v(nu) = (Sigma + nu I)^{-1} Sigma target with nu >= 0 chosen so that
// ||v|| = 1 when the target lies outside the ball; ||v(nu)|| is monotone in
// nu, so bisection on the multiplier suffices.
inline Vec project_sigma_norm(const Mat& sigma, const Vec& target, double tol = 1e-10) {
  if (norm2(target) <= 1.0) return target;
  const Vec rhs = sigma.mat_vec(target);
  auto solve_at = [&](double nu) {
    Mat shifted = sigma;
    for (int i = 0; i < shifted.dim(); ++i) shifted(i, i) += nu;
    auto v = cholesky_solve(shifted, rhs);
    if (!v) throw std::runtime_error("sigma-norm projection: matrix numerically singular");
    return *v;
  };
  double lo = 0.0, hi = 1.0;
  while (norm2(solve_at(hi)) > 1.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e18) throw std::runtime_error("sigma-norm projection: multiplier search diverged");
  }
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (norm2(solve_at(mid)) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return solve_at(0.5 * (lo + hi));
}

// Online-Newton GLMtron: second-order variant with Sigma accumulated from
// feature outer products and a Sigma-norm projection onto the unit ball.
class NewtonGlmOracle {
 public:
  struct Options {
    std::optional<double> step;  // defaults to 1/(2 c_sigma)
    double sigma_init = 1.0;     // epsilon I initialization
  };

  NewtonGlmOracle(int dim, LinkFunction link) : NewtonGlmOracle(dim, std::move(link), Options{}) {}

  NewtonGlmOracle(int dim, LinkFunction link, Options opts)
      : dim_(dim), link_(std::move(link)), opts_(opts), theta_(dim, 0.0), sigma_(dim, opts.sigma_init) {
    if (dim <= 0) throw std::invalid_argument("newton glm: dimension must be positive");
    if (!(link_.derivative_floor > 0.0))
      throw std::invalid_argument("newton glm: link needs a positive derivative floor");
    if (!(opts_.sigma_init > 0.0)) throw std::invalid_argument("newton glm: sigma_init must be positive");
    step_ = opts_.step ? *opts_.step : 1.0 / (2.0 * link_.derivative_floor);
    if (!(step_ > 0.0)) throw std::invalid_argument("newton glm: step must be positive");
  }

  const Vec& theta() const { return theta_; }
  const Mat& sigma_matrix() const { return sigma_; }
  const LinkFunction& link() const { return link_; }

  double predict(std::span<const double> x) const {
    check_features(x);
    return clip01(link_(dot(theta_, x)));
  }
  double predict(const Context& ctx, int arm) const { return predict(ctx.features(arm)); }

  void update(std::span<const double> x, double y) {
    check_outcome(y);
    check_features(x);
    sigma_.rank1_update(x);
    const double residual = link_(dot(theta_, x)) - y;
    if (residual != 0.0) {
      Vec g(x.begin(), x.end());
      scale(g, 2.0 * residual);
      auto dir = cholesky_solve(sigma_, g);
      if (!dir) throw std::runtime_error("newton glm: sigma matrix numerically singular");
      Vec tilde = theta_;
      axpy(-step_, *dir, tilde);
      theta_ = project_sigma_norm(sigma_, tilde);
    }
  }

  void update(const Example& ex) { update(ex.context.features(ex.arm), ex.outcome); }

  OracleRegretBudget budget(long long horizon) const {
    return newton_glm_budget(dim_, horizon, link_.derivative_floor);
  }
  static constexpr OracleGuarantee guarantee() { return OracleGuarantee::realizable_error; }

 private:
  void check_features(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_)
      throw std::invalid_argument("newton glm: feature dimension mismatch");
    if (norm2(x) > 1.0 + 1e-9) throw std::invalid_argument("newton glm: feature norm exceeds 1");
  }

  int dim_;
  LinkFunction link_;
  Options opts_;
  double step_;
  Vec theta_;
  Mat sigma_;
};

}  // namespace squarecb
