#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "squarecb/epoch_cover.hpp"
#include "squarecb/rng.hpp"

using namespace squarecb;

namespace {

std::vector<ContextTable> constant_tables(int n, int n_contexts) {
  std::vector<ContextTable> base(n);
  for (int i = 0; i < n; ++i) base[i].values.assign(n_contexts, n == 1 ? 0.0 : static_cast<double>(i) / (n - 1));
  return base;
}

std::vector<Context> contexts_upto(int n) {
  std::vector<Context> out(n);
  for (int i = 0; i < n; ++i) out[i].id = i;
  return out;
}

// exhaustive minimal-cover search: smallest subset within eps of every member
int brute_force_minimal_cover(const std::vector<ContextTable>& base, const std::vector<Context>& sample,
                              double eps) {
  const int n = static_cast<int>(base.size());
  std::vector<std::vector<bool>> covers(n, std::vector<bool>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) covers[i][j] = empirical_l2(base[i], base[j], sample) <= eps;
  for (int size = 1; size <= n; ++size) {
    std::vector<int> pick(size);
    std::function<bool(int, int)> search = [&](int idx, int start) -> bool {
      if (idx == size) {
        for (int j = 0; j < n; ++j) {
          bool ok = false;
          for (int c : pick)
            if (covers[c][j]) {
              ok = true;
              break;
            }
          if (!ok) return false;
        }
        return true;
      }
      for (int c = start; c < n; ++c) {
        pick[idx] = c;
        if (search(idx + 1, c + 1)) return true;
      }
      return false;
    };
    if (search(0, 0)) return size;
  }
  return n;
}

}  // namespace

TEST_CASE("cover collapses to one ball when eps exceeds the diameter", "[oracle_core][epoch]") {
  auto base = constant_tables(8, 3);
  auto sample = contexts_upto(3);
  REQUIRE(greedy_cover(base, sample, 1.0).size() == 1);
  REQUIRE(greedy_cover(base, sample, 1.0 + 1e-9).size() == 1);
}

TEST_CASE("zero-scale cover enumerates every distinct member", "[oracle_core][epoch]") {
  auto base = constant_tables(7, 2);
  auto sample = contexts_upto(2);
  REQUIRE(greedy_cover(base, sample, 0.0).size() == 7);
}

TEST_CASE("greedy cover of 21 constants at scale 0.1", "[oracle_core][epoch]") {
  auto base = constant_tables(21, 4);
  auto sample = contexts_upto(4);
  const auto centers = greedy_cover(base, sample, 0.1);
  REQUIRE(centers.size() <= 6);
  REQUIRE(max_cover_distance(base, sample, centers) <= 0.1);
  const int minimal = brute_force_minimal_cover(base, sample, 0.1);
  REQUIRE(minimal == 5);
  REQUIRE(static_cast<int>(centers.size()) >= minimal);
}

TEST_CASE("cover property holds for random classes", "[oracle_core][epoch]") {
  SplitRng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + rng.uniform_int(30);
    const int m = 1 + rng.uniform_int(6);
    std::vector<ContextTable> base(n);
    for (auto& g : base) {
      g.values.resize(m);
      for (double& v : g.values) v = rng.uniform();
    }
    auto sample = contexts_upto(m);
    const double eps = rng.uniform(0.0, 0.5);
    const auto centers = greedy_cover(base, sample, eps);
    REQUIRE(max_cover_distance(base, sample, centers) <= eps + 1e-12);
  }
}

TEST_CASE("epoch schedule follows ceil(e^{m-1}) with duplicates skipped", "[oracle_core][epoch]") {
  auto base = constant_tables(5, 3);
  EpochCoverOracle<ContextTable> oracle(base, 2, 0.3);
  REQUIRE(oracle.epoch() == 1);          // tau_1 = 1, rebuilt before any data
  REQUIRE(oracle.next_boundary() == 3);  // ceil(e) = 3

  std::vector<long long> rebuild_rounds;
  int last_epoch = oracle.epoch();
  SplitRng rng(5);
  for (long long t = 1; t <= 160; ++t) {
    Context x;
    x.id = static_cast<int>(t % 3);
    oracle.update(Example{x, static_cast<int>(t % 2), rng.uniform()});
    if (oracle.epoch() != last_epoch) {
      rebuild_rounds.push_back(t + 1);  // the rebuild prepares the next round
      last_epoch = oracle.epoch();
    }
  }
  REQUIRE(rebuild_rounds == std::vector<long long>{3, 8, 21, 55, 149});
  REQUIRE(std::is_sorted(rebuild_rounds.begin(), rebuild_rounds.end()));
  REQUIRE(oracle.sample_buffer().size() == 160);
}

TEST_CASE("rebuild restarts the inner tensor class", "[oracle_core][epoch]") {
  auto base = constant_tables(9, 2);
  EpochCoverOracle<ContextTable> oracle(base, 3, 0.3);
  // the opening epoch covers the empty sample with a single center
  REQUIRE(oracle.cover_indices().size() == 1);
  REQUIRE(oracle.inner_class_size() == 1);

  Context x;
  x.id = 0;
  oracle.update(Example{x, 0, 0.5});
  oracle.update(Example{x, 1, 0.5});  // hits the tau_2 = 3 boundary
  // constants 0..1 at scale 0.3: greedy picks 0, 1, 0.5 -> 3 centers, 3^3 tuples
  REQUIRE(oracle.epoch() == 2);
  REQUIRE(oracle.cover_indices().size() == 3);
  REQUIRE(oracle.inner_class_size() == 27);
}

TEST_CASE("epoch oracle learns a stationary tabular truth", "[oracle_core][epoch]") {
  std::vector<ContextTable> base(6);
  for (int i = 0; i < 6; ++i) base[i].values = {0.15 * i, 1.0 - 0.15 * i};
  EpochCoverOracle<ContextTable> oracle(base, 2, 0.05);
  SplitRng rng(9);
  // truth: arm 0 follows base[2], arm 1 follows base[4]
  for (int t = 0; t < 400; ++t) {
    Context x;
    x.id = rng.uniform_int(2);
    const int arm = rng.uniform_int(2);
    const double mean = arm == 0 ? base[2].values[x.id] : base[4].values[x.id];
    oracle.update(Example{x, arm, mean});  // noiseless outcomes
  }
  Context x0;
  x0.id = 0;
  REQUIRE(oracle.predict(x0, 0) == Approx(base[2].values[0]).margin(0.05));
  REQUIRE(oracle.predict(x0, 1) == Approx(base[4].values[0]).margin(0.05));
}

TEST_CASE("epoch oracle validates construction and guards resources", "[oracle_core][epoch]") {
  REQUIRE_THROWS_AS(EpochCoverOracle<ContextTable>({}, 2, 0.1), std::invalid_argument);
  auto base = constant_tables(30, 2);
  // 30 distinct constants at scale 0: the first data-driven rebuild would
  // need a 30^5 tensor class and must hit the resource cap
  EpochCoverOracle<ContextTable> oracle(base, 5, 0.0, 1000);
  Context x;
  x.id = 0;
  oracle.update(Example{x, 0, 0.5});
  REQUIRE_THROWS_AS(oracle.update(Example{x, 1, 0.5}), std::runtime_error);
}
