#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "squarecb/aggregating.hpp"
#include "squarecb/oracle.hpp"

namespace squarecb {

// Base hypothesis over an enumerated context set: a map context -> [0,1].
struct ContextTable {
  Vec values;
  double operator()(const Context& x) const { return values[static_cast<std::size_t>(x.id)]; }
};

// Empirical L2 distance between two base hypotheses on a sample.
template <class G>
double empirical_l2(const G& g, const G& h, std::span<const Context> sample) {
  if (sample.empty()) return 0.0;
  double s = 0.0;
  for (const Context& x : sample) {
    const double d = g(x) - h(x);
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(sample.size()));
}

// Greedy farthest-point cover: returns indices of the chosen centers. Every
// class member ends up within eps of some center in empirical L2 on the
// sample. Deterministic: starts from index 0, ties broken by lowest index.
template <class G>
std::vector<int> greedy_cover(const std::vector<G>& base, std::span<const Context> sample, double eps) {
  if (base.empty()) throw std::invalid_argument("greedy_cover: empty base class");
  if (eps < 0.0) throw std::invalid_argument("greedy_cover: negative cover scale");
  std::vector<int> centers = {0};
  std::vector<double> nearest(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) nearest[i] = empirical_l2(base[i], base[0], sample);
  for (;;) {
    int far = -1;
    double far_dist = eps;
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (nearest[i] > far_dist) {
        far_dist = nearest[i];
        far = static_cast<int>(i);
      }
    }
    if (far < 0) break;
    centers.push_back(far);
    for (std::size_t i = 0; i < base.size(); ++i)
      nearest[i] = std::min(nearest[i], empirical_l2(base[i], base[far], sample));
  }
  return centers;
}

template <class G>
double max_cover_distance(const std::vector<G>& base, std::span<const Context> sample,
                          const std::vector<int>& centers) {
  double worst = 0.0;
  for (const G& g : base) {
    double best = std::numeric_limits<double>::infinity();
    for (int c : centers) best = std::min(best, empirical_l2(g, base[c], sample));
    worst = std::max(worst, best);
  }
  return worst;
}

// A member of the tensorized class: one base hypothesis per arm, drawn from
// a shared cover.
template <class G>
struct TensorHypothesis {
  std::shared_ptr<const std::vector<G>> cover;
  std::vector<int> pick;  // one cover index per arm

  double operator()(const Context& x, int arm) const { return (*cover)[pick[arm]](x); }
};

// Online regression oracle for tensorized classes F = G^K when only the base
// class G is enumerable: proceeds in epochs of (roughly) geometric length,
// rebuilds a greedy eps-cover of G on all contexts seen so far at each epoch
// boundary, and runs the aggregating forecaster over the induced tensor
// class within the epoch. Boundaries are tau_m = ceil(e^{m-1}), duplicates
// skipped so the schedule stays strictly increasing.
template <class G>
class EpochCoverOracle {
 public:
  EpochCoverOracle(std::vector<G> base, int arms, double cover_scale,
                   std::size_t tuple_cap = 250000)
      : base_(std::move(base)), arms_(arms), eps_(cover_scale), tuple_cap_(tuple_cap) {
    if (base_.empty()) throw std::invalid_argument("epoch cover oracle: empty base class");
    if (arms_ < 2) throw std::invalid_argument("epoch cover oracle: need at least two arms");
    if (!(eps_ >= 0.0)) throw std::invalid_argument("epoch cover oracle: invalid cover scale");
    maybe_rebuild();  // tau_1 = 1: the first epoch starts before any data
  }

  int epoch() const { return epoch_; }
  long long next_boundary() const { return next_boundary_; }
  const std::vector<int>& cover_indices() const { return cover_indices_; }
  std::size_t inner_class_size() const { return inner_ ? inner_->class_size() : 0; }
  const std::vector<Context>& sample_buffer() const { return seen_; }

  double predict(const Context& x, int arm) const { return inner_->predict(x, arm); }

  void update(const Example& ex) {
    inner_->update(ex);
    seen_.push_back(ex.context);
    ++updates_;
    maybe_rebuild();
  }

  // Construct the cover from the current sample buffer and restart the inner
  // aggregating state over the induced tensor class.
  void rebuild() {
    ++epoch_;
    cover_indices_ = greedy_cover(base_, seen_, eps_);
    auto cover = std::make_shared<std::vector<G>>();
    cover->reserve(cover_indices_.size());
    for (int c : cover_indices_) cover->push_back(base_[c]);

    double tuples = 1.0;
    for (int a = 0; a < arms_; ++a) tuples *= static_cast<double>(cover->size());
    if (tuples > static_cast<double>(tuple_cap_))
      throw std::runtime_error("epoch cover oracle: tensor class exceeds the resource cap");

    std::vector<TensorHypothesis<G>> tensor;
    tensor.reserve(static_cast<std::size_t>(tuples));
    std::vector<int> pick(arms_, 0);
    for (;;) {
      tensor.push_back(TensorHypothesis<G>{cover, pick});
      int a = arms_ - 1;
      while (a >= 0 && ++pick[a] == static_cast<int>(cover->size())) pick[a--] = 0;
      if (a < 0) break;
    }
    inner_.emplace(std::move(tensor));
  }

  static constexpr OracleGuarantee guarantee() { return OracleGuarantee::adversarial_regret; }

 private:
  void maybe_rebuild() {
    bool due = false;
    while (updates_ + 1 >= next_boundary_) {
      due = true;
      advance_boundary();
    }
    if (due) rebuild();
  }

  void advance_boundary() {
    long long b = next_boundary_;
    while (b <= next_boundary_) {
      b = static_cast<long long>(std::ceil(std::exp(static_cast<double>(schedule_index_))));
      ++schedule_index_;
    }
    next_boundary_ = b;
  }

  std::vector<G> base_;
  int arms_;
  double eps_;
  std::size_t tuple_cap_;

  std::vector<Context> seen_;
  long long updates_ = 0;
  int epoch_ = 0;
  int schedule_index_ = 0;  // exponent m-1 of the next candidate boundary
  long long next_boundary_ = 1;
  std::vector<int> cover_indices_;
  std::optional<AggregatingOracle<TensorHypothesis<G>>> inner_;
};

}  // namespace squarecb
