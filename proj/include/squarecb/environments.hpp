#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "squarecb/aggregating.hpp"
#include "squarecb/glm.hpp"
#include "squarecb/linalg.hpp"
#include "squarecb/oracle.hpp"
#include "squarecb/rng.hpp"

namespace squarecb {

enum class NoiseKind { none, bernoulli, clipped_gaussian };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::bernoulli;
  double sigma = 0.1;  // clipped_gaussian only

  double sample(double mean, SplitRng& rng) const {
    switch (kind) {
      case NoiseKind::none:
        return mean;
      case NoiseKind::bernoulli:
        return rng.bernoulli(mean) ? 1.0 : 0.0;
      case NoiseKind::clipped_gaussian:
        return clip01(mean + sigma * rng.gaussian());
    }
    return mean;
  }
};

enum class ContextSchedule { iid, blocks, script };

// Ground-truth instance over an enumerated context set: mean-loss tables for
// the regret reference (true_means) and for the realizable class member
// (fstar); the two differ exactly when the instance is misspecified.
class TabularEnv {
 public:
  TabularEnv(int n_contexts, int arms, std::vector<TableHypothesis> hypothesis_class, int fstar_index,
             NoiseSpec noise, ContextSchedule schedule = ContextSchedule::iid, long long block_len = 1,
             std::vector<int> script = {})
      : n_contexts_(n_contexts),
        arms_(arms),
        class_(std::move(hypothesis_class)),
        fstar_index_(fstar_index),
        noise_(noise),
        schedule_(schedule),
        block_len_(block_len),
        script_(std::move(script)) {
    if (n_contexts_ <= 0 || arms_ < 2) throw std::invalid_argument("tabular env: bad shape");
    if (class_.empty()) throw std::invalid_argument("tabular env: empty hypothesis class");
    if (fstar_index_ < 0 || fstar_index_ >= static_cast<int>(class_.size()))
      throw std::invalid_argument("tabular env: fstar index out of range");
    if (schedule_ == ContextSchedule::blocks && block_len_ <= 0)
      throw std::invalid_argument("tabular env: block length must be positive");
    if (schedule_ == ContextSchedule::script && script_.empty())
      throw std::invalid_argument("tabular env: empty context script");
    true_means_ = class_[fstar_index_].values;
  }

  int arms() const { return arms_; }
  int n_contexts() const { return n_contexts_; }
  const std::vector<TableHypothesis>& hypothesis_class() const { return class_; }
  int fstar_index() const { return fstar_index_; }
  const NoiseSpec& noise() const { return noise_; }
  ContextSchedule schedule() const { return schedule_; }
  long long block_len() const { return block_len_; }
  const std::vector<int>& script() const { return script_; }
  const Vec& true_means_table() const { return true_means_; }

  Context context(long long t, SplitRng& rng) const {
    Context x;
    switch (schedule_) {
      case ContextSchedule::iid:
        x.id = rng.uniform_int(n_contexts_);
        break;
      case ContextSchedule::blocks:
        x.id = static_cast<int>(((t - 1) / block_len_) % n_contexts_);
        break;
      case ContextSchedule::script:
        x.id = script_[static_cast<std::size_t>((t - 1) % static_cast<long long>(script_.size()))];
        break;
    }
    return x;
  }

  std::vector<double> sample_losses(const Context& x, SplitRng& rng) const {
    std::vector<double> losses(arms_);
    for (int a = 0; a < arms_; ++a) {
      double mean = true_mean(x, a);
      if (tv_eps_ > 0.0) mean = clip01(mean + rng.uniform(-tv_eps_, tv_eps_));
      losses[a] = noise_.sample(mean, rng);
    }
    return losses;
  }

  // Time-varying misspecification: redraw a bounded perturbation of the mean
  // every round. Regret accounting stays against the stored mean table.
  void set_time_varying_misspec(double eps) {
    if (!(eps >= 0.0 && eps <= 0.25))
      throw std::invalid_argument("tabular env: time-varying eps must lie in [0, 1/4]");
    tv_eps_ = eps;
  }
  double time_varying_misspec() const { return tv_eps_; }

  double true_mean(const Context& x, int a) const {
    return true_means_[static_cast<std::size_t>(x.id) * arms_ + a];
  }

  double fstar(const Context& x, int a) const { return class_[fstar_index_](x, a); }

  int best_arm(const Context& x) const {
    int best = 0;
    for (int a = 1; a < arms_; ++a)
      if (true_mean(x, a) < true_mean(x, best)) best = a;
    return best;
  }

  double misspec_level() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < true_means_.size(); ++i)
      worst = std::max(worst, std::abs(true_means_[i] - class_[fstar_index_].values[i]));
    return worst;
  }

  // Replace the regret-reference means (used by the misspecified factory).
  void set_true_means(Vec means) {
    if (means.size() != true_means_.size()) throw std::invalid_argument("tabular env: means table shape");
    true_means_ = std::move(means);
  }

 private:
  int n_contexts_;
  int arms_;
  std::vector<TableHypothesis> class_;
  int fstar_index_;
  NoiseSpec noise_;
  ContextSchedule schedule_;
  long long block_len_;
  std::vector<int> script_;
  Vec true_means_;
  double tv_eps_ = 0.0;
};

// Random finite-class instance: class_size tables of independent uniform
// [0,1] values over an enumerated context set, one member designated f*.
// Bernoulli losses.
inline TabularEnv make_finite_class_env(int arms, int class_size, std::uint64_t seed,
                                        int n_contexts = 10) {
  if (class_size < 1) throw std::invalid_argument("finite class env: class_size must be >= 1");
  SplitRng rng = SplitRng(seed).stream("env/instance");
  std::vector<TableHypothesis> cls(class_size);
  for (auto& h : cls) {
    h.arms = arms;
    h.values.resize(static_cast<std::size_t>(n_contexts) * arms);
    for (double& v : h.values) v = rng.uniform();
  }
  const int fstar = class_size == 1 ? 0 : rng.uniform_int(class_size);
  return TabularEnv(n_contexts, arms, std::move(cls), fstar, NoiseSpec{NoiseKind::bernoulli, 0.0});
}

// The constant-gap family behind the sqrt(T) lower bound: two arms, N
// contexts served in consecutive blocks, N+1 noiseless instances that agree
// everywhere except one special context per instance.
struct GapInstanceFamily {
  int n_contexts = 0;     // N
  double gap = 0.25;      // Delta
  long long horizon = 0;  // padded so N divides T
  long long block_len = 0;
  std::vector<TableHypothesis> instances;  // f_0 ... f_N; also the class F

  int size() const { return static_cast<int>(instances.size()); }

  TabularEnv instance_env(int i) const {
    if (i < 0 || i >= size()) throw std::invalid_argument("gap family: instance index out of range");
    return TabularEnv(n_contexts, 2, instances, i, NoiseSpec{NoiseKind::none, 0.0},
                      ContextSchedule::blocks, block_len);
  }
};

inline GapInstanceFamily make_gap_family(long long horizon, double gap) {
  if (horizon < 2) throw std::invalid_argument("gap family: horizon too small");
  if (!(gap > 0.0 && gap <= 0.25))
    throw std::invalid_argument("gap family: gap must lie in (0, 1/4]");
  GapInstanceFamily fam;
  fam.gap = gap;
  fam.n_contexts = static_cast<int>(std::llround(std::sqrt(2.0 * static_cast<double>(horizon))));
  fam.n_contexts = std::max(1, fam.n_contexts);
  const long long n = fam.n_contexts;
  fam.block_len = (horizon + n - 1) / n;  // pad T upward to divisibility
  fam.horizon = fam.block_len * n;

  const double base_a1 = 0.5 - gap;
  fam.instances.resize(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    TableHypothesis& h = fam.instances[i];
    h.arms = 2;
    h.values.resize(static_cast<std::size_t>(n) * 2);
    for (int j = 0; j < n; ++j) {
      h.values[2 * j] = base_a1;   // arm 0
      h.values[2 * j + 1] = 0.5;   // arm 1
    }
    if (i >= 1) h.values[2 * (i - 1) + 1] = 0.5 - 2.0 * gap;  // special context flips the best arm
  }
  return fam;
}

// Bounded perturbation of a realizable instance: the class keeps f*, the
// regret-reference means move by at most eps (clipped to [0,1]). With
// time_varying set, the perturbation is redrawn every round instead of
// baked into the table.
inline TabularEnv make_misspecified_env(const TabularEnv& base, double eps, std::uint64_t seed,
                                        bool time_varying = false) {
  if (!(eps >= 0.0 && eps <= 0.25))
    throw std::invalid_argument("misspecified env: eps must lie in [0, 1/4]");
  if (base.misspec_level() != 0.0)
    throw std::invalid_argument("misspecified env: base instance must be realizable");
  TabularEnv env = base;
  if (time_varying) {
    env.set_time_varying_misspec(eps);
    return env;
  }
  SplitRng rng = SplitRng(seed).stream("env/perturbation");
  Vec means = base.true_means_table();
  for (double& m : means) m = clip01(m + rng.uniform(-eps, eps));
  env.set_true_means(std::move(means));
  return env;
}

// ---------------------------------------------------------------------------
// Feature-based instances (linear and GLM classes)
// ---------------------------------------------------------------------------

enum class FeatureFamily { linear, glm };

// Per-round contexts are K feature vectors drawn uniformly from the unit
// ball. Linear instances embed an intercept coordinate so mean losses are
// exactly <theta*, x_a> and stay inside [0,1]; GLM instances pass the margin
// through the link.
class FeatureEnv {
 public:
  struct Config {
    FeatureFamily family = FeatureFamily::linear;
    int arms = 2;
    int dim = 5;  // oracle feature dimension (intercept included for linear)
    LinkFunction link = clipped_identity_link();  // glm only
    double signal_norm = 0.5;                     // norm of the non-intercept part of theta*
    NoiseSpec noise{NoiseKind::clipped_gaussian, 0.1};
    std::uint64_t seed = 1;
    std::optional<Vec> theta_star;  // explicit ground truth; sampled from seed when absent
  };

  explicit FeatureEnv(Config cfg) : cfg_(std::move(cfg)) {
    if (cfg_.arms < 2) throw std::invalid_argument("feature env: need at least two arms");
    if (cfg_.dim < 2) throw std::invalid_argument("feature env: dimension must be at least 2");
    if (cfg_.theta_star) {
      if (static_cast<int>(cfg_.theta_star->size()) != cfg_.dim)
        throw std::invalid_argument("feature env: theta_star dimension mismatch");
      if (norm2(*cfg_.theta_star) > 1.0 + 1e-12)
        throw std::invalid_argument("feature env: theta_star must lie in the unit ball");
      theta_star_ = *cfg_.theta_star;
      return;
    }
    SplitRng rng = SplitRng(cfg_.seed).stream("env/instance");
    theta_star_.assign(cfg_.dim, 0.0);
    if (cfg_.family == FeatureFamily::linear) {
      const double rho = std::min(cfg_.signal_norm, 0.70);
      Vec v = sample_ball(cfg_.dim - 1, rng);
      scale(v, rho);
      for (int i = 0; i + 1 < cfg_.dim; ++i) theta_star_[i] = v[i];
      theta_star_[cfg_.dim - 1] = 0.5 * std::sqrt(2.0);  // intercept weight: mean offset 1/2
    } else {
      theta_star_ = sample_ball(cfg_.dim, rng);
    }
  }

  int arms() const { return cfg_.arms; }
  int dim() const { return cfg_.dim; }
  const Vec& theta_star() const { return theta_star_; }
  const Config& config() const { return cfg_; }

  Context context(long long, SplitRng& rng) const {
    Context x;
    x.arm_features.resize(cfg_.arms);
    for (int a = 0; a < cfg_.arms; ++a) {
      if (cfg_.family == FeatureFamily::linear) {
        const Vec u = sample_ball(cfg_.dim - 1, rng);
        Vec f(cfg_.dim);
        const double inv = 1.0 / std::sqrt(2.0);
        for (int i = 0; i + 1 < cfg_.dim; ++i) f[i] = u[i] * inv;
        f[cfg_.dim - 1] = inv;
        x.arm_features[a] = std::move(f);
      } else {
        x.arm_features[a] = sample_ball(cfg_.dim, rng);
      }
    }
    return x;
  }

  std::vector<double> sample_losses(const Context& x, SplitRng& rng) const {
    std::vector<double> losses(cfg_.arms);
    for (int a = 0; a < cfg_.arms; ++a) losses[a] = cfg_.noise.sample(true_mean(x, a), rng);
    return losses;
  }

  double true_mean(const Context& x, int a) const {
    const double margin = dot(theta_star_, x.features(a));
    return cfg_.family == FeatureFamily::linear ? clip01(margin) : clip01(cfg_.link(margin));
  }

  int best_arm(const Context& x) const {
    int best = 0;
    for (int a = 1; a < cfg_.arms; ++a)
      if (true_mean(x, a) < true_mean(x, best)) best = a;
    return best;
  }

  static Vec sample_ball(int dim, SplitRng& rng) {
    Vec g(dim);
    double n2 = 0.0;
    for (double& v : g) {
      v = rng.gaussian();
      n2 += v * v;
    }
    const double n = std::sqrt(n2);
    const double r = std::pow(rng.uniform(), 1.0 / dim);
    if (n > 0.0) scale(g, r / n);
    return g;
  }

 private:
  Config cfg_;
  Vec theta_star_;
};

// ---------------------------------------------------------------------------
// Unit-ball action instance (constant ground-truth direction)
// ---------------------------------------------------------------------------

// Raw losses live in [-1,1]: <theta*, a> plus bounded uniform noise; the
// validation ||theta*|| + misspec + noise_halfwidth <= 1 keeps losses in
// range without clipping, so the oracle target stays well posed. An optional
// misspecification term eps * <u, a>^2 (|term| <= eps) breaks linearity;
// its best-response value has no closed form, so the optimum is then located
// numerically over the span of theta* and u at construction.
class BallEnv {
 public:
  BallEnv(Vec theta_star, double noise_halfwidth, double misspec_eps = 0.0, Vec misspec_dir = {})
      : theta_star_(std::move(theta_star)),
        noise_halfwidth_(noise_halfwidth),
        misspec_eps_(misspec_eps),
        misspec_dir_(std::move(misspec_dir)) {
    if (theta_star_.empty()) throw std::invalid_argument("ball env: empty theta*");
    if (!(noise_halfwidth_ >= 0.0)) throw std::invalid_argument("ball env: negative noise width");
    if (!(misspec_eps_ >= 0.0)) throw std::invalid_argument("ball env: negative misspec level");
    if (misspec_eps_ > 0.0) {
      if (misspec_dir_.size() != theta_star_.size())
        throw std::invalid_argument("ball env: misspec direction dimension mismatch");
      const double n = norm2(misspec_dir_);
      if (n <= 0.0) throw std::invalid_argument("ball env: zero misspec direction");
      scale(misspec_dir_, 1.0 / n);
    }
    if (norm2(theta_star_) + misspec_eps_ + noise_halfwidth_ > 1.0 + 1e-12)
      throw std::invalid_argument("ball env: ||theta*|| + misspec + noise width must not exceed 1");
    optimal_value_ = misspec_eps_ > 0.0 ? locate_optimum() : -norm2(theta_star_);
  }

  static BallEnv random(int dim, double theta_norm, double noise_halfwidth, std::uint64_t seed,
                        double misspec_eps = 0.0) {
    SplitRng rng = SplitRng(seed).stream("env/instance");
    Vec theta = FeatureEnv::sample_ball(dim, rng);
    const double n = norm2(theta);
    if (n > 0.0) scale(theta, theta_norm / n);
    Vec dir;
    if (misspec_eps > 0.0) {
      dir = FeatureEnv::sample_ball(dim, rng);
      if (norm2(dir) == 0.0) dir[0] = 1.0;
    }
    return BallEnv(std::move(theta), noise_halfwidth, misspec_eps, std::move(dir));
  }

  int dim() const { return static_cast<int>(theta_star_.size()); }
  const Vec& theta_star() const { return theta_star_; }
  double noise_halfwidth() const { return noise_halfwidth_; }
  double misspec_eps() const { return misspec_eps_; }

  double raw_loss(std::span<const double> action, SplitRng& rng) const {
    return true_mean(action) +
           (noise_halfwidth_ > 0.0 ? rng.uniform(-noise_halfwidth_, noise_halfwidth_) : 0.0);
  }

  double true_mean(std::span<const double> action) const {
    double mean = dot(theta_star_, action);
    if (misspec_eps_ > 0.0) {
      const double m = dot(misspec_dir_, action);
      mean += misspec_eps_ * m * m;
    }
    return mean;
  }

  // min over the unit ball of the true mean loss
  double optimal_value() const { return optimal_value_; }

 private:
  // The mean is constant on directions orthogonal to span{theta*, u}, so the
  // optimum lies in that plane: polar grid plus local refinement.
  double locate_optimum() const {
    const double tn = norm2(theta_star_);
    Vec e1 = theta_star_;
    if (tn > 0.0)
      scale(e1, 1.0 / tn);
    else
      e1 = misspec_dir_;
    Vec e2 = misspec_dir_;
    axpy(-dot(misspec_dir_, e1), e1, e2);
    const double o = norm2(e2);
    if (o > 1e-12)
      scale(e2, 1.0 / o);
    else
      std::fill(e2.begin(), e2.end(), 0.0);
    const double u1 = dot(misspec_dir_, e1);
    const double u2 = dot(misspec_dir_, e2);

    auto value = [&](double x, double y) {
      const double m = u1 * x + u2 * y;
      return tn * x + misspec_eps_ * m * m;
    };
    double best = value(0.0, 0.0);
    double bx = 0.0, by = 0.0;
    const int rs = 200, as = 400;
    for (int ri = 0; ri <= rs; ++ri) {
      const double r = static_cast<double>(ri) / rs;
      for (int ai = 0; ai < as; ++ai) {
        const double phi = 2.0 * M_PI * ai / as;
        const double x = r * std::cos(phi), y = r * std::sin(phi);
        const double v = value(x, y);
        if (v < best) {
          best = v;
          bx = x;
          by = y;
        }
      }
    }
    double step = 0.01;
    for (int round = 0; round < 24; ++round) {
      bool moved = false;
      for (const auto& [dx, dy] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}) {
        double x = bx + dx, y = by + dy;
        const double n = std::sqrt(x * x + y * y);
        if (n > 1.0) {
          x /= n;
          y /= n;
        }
        const double v = value(x, y);
        if (v < best) {
          best = v;
          bx = x;
          by = y;
          moved = true;
        }
      }
      if (!moved) step *= 0.5;
    }
    return best;
  }

  Vec theta_star_;
  double noise_halfwidth_;
  double misspec_eps_;
  Vec misspec_dir_;
  double optimal_value_ = 0.0;
};

}  // namespace squarecb
