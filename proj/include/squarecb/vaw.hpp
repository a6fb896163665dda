#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "squarecb/linalg.hpp"
#include "squarecb/oracle.hpp"

namespace squarecb {

// Vovk-Azoury-Warmuth forecaster: ridge-regularized online least squares
// whose prediction augments the Gram matrix with the query features,
//   yhat(x) = x^T (lambda I + sum_{s<t} x_s x_s^T + x x^T)^{-1} sum_{s<t} y_s x_s.
// For lambda > 0 the inverse Gram is maintained by rank-one (Sherman-Morrison)
// updates; lambda = 0 is supported as a direct-solve mode for small problems.
class VawOracle {
 public:
  explicit VawOracle(int dim, double ridge = 1.0)
      : dim_(dim), ridge_(ridge), moment_(dim, 0.0), gram_(dim, ridge) {
    if (dim <= 0) throw std::invalid_argument("vaw: dimension must be positive");
    if (ridge < 0.0) throw std::invalid_argument("vaw: ridge must be nonnegative");
    if (ridge > 0.0) inverse_gram_ = Mat(dim, 1.0 / ridge);
  }

  int dim() const { return dim_; }
  double ridge() const { return ridge_; }
  const Mat& inverse_gram() const {
    if (ridge_ <= 0.0) throw std::runtime_error("vaw: inverse gram is only maintained for ridge > 0");
    return inverse_gram_;
  }

  // Unclipped query-augmented prediction. With v = G^{-1}x this reduces to
  // x^T G^{-1} m / (1 + x^T G^{-1} x).
  double predict_raw(std::span<const double> x) const {
    check_dim(x);
    if (ridge_ > 0.0) {
      const Vec v = inverse_gram_.mat_vec(x);
      const double c = dot(v, moment_);
      const double s = dot(v, x);
      return c / (1.0 + s);
    }
    Mat g = gram_;
    g.rank1_update(x);
    if (auto theta = cholesky_solve(g, moment_)) return dot(x, *theta);
    // singular augmented Gram: jitter onto the observed subspace
    double trace = 0.0;
    for (int i = 0; i < dim_; ++i) trace += g(i, i);
    for (int i = 0; i < dim_; ++i) g(i, i) += 1e-10 * (1.0 + trace);
    if (auto theta = cholesky_solve(g, moment_)) return dot(x, *theta);
    return 0.0;
  }

  double predict(std::span<const double> x) const { return clip01(predict_raw(x)); }

  double predict(const Context& ctx, int arm) const { return predict(ctx.features(arm)); }

  void update(std::span<const double> x, double y) {
    check_outcome(y);
    check_dim(x);
    gram_.rank1_update(x);
    if (ridge_ > 0.0) {
      // U <- U - (Ux)(Ux)^T / (1 + x^T U x)
      const Vec v = inverse_gram_.mat_vec(x);
      const double denom = 1.0 + dot(v, x);
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) inverse_gram_(i, j) -= v[i] * v[j] / denom;
    }
    axpy(y, x, moment_);
  }

  void update(const Example& ex) { update(ex.context.features(ex.arm), ex.outcome); }

  // Ridge parameter estimate (no query augmentation); this is the vector
  // prediction used by the unit-ball reduction.
  Vec parameter() const {
    if (ridge_ > 0.0) return inverse_gram_.mat_vec(moment_);
    if (auto theta = cholesky_solve(gram_, moment_)) return *theta;
    Mat g = gram_;
    double trace = 0.0;
    for (int i = 0; i < dim_; ++i) trace += g(i, i);
    for (int i = 0; i < dim_; ++i) g(i, i) += 1e-10 * (1.0 + trace);
    if (auto theta = cholesky_solve(g, moment_)) return *theta;
    return Vec(dim_, 0.0);
  }

  OracleRegretBudget budget(long long horizon) const { return vaw_budget(dim_, horizon); }
  static constexpr OracleGuarantee guarantee() { return OracleGuarantee::adversarial_regret; }

 private:
  void check_dim(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_)
      throw std::invalid_argument("vaw: feature dimension mismatch");
  }

  int dim_;
  double ridge_;
  Vec moment_;
  Mat gram_;
  Mat inverse_gram_;
};

}  // namespace squarecb
