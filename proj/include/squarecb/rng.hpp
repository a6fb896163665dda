#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>

namespace squarecb {

// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// FNV-1a, used to fold stream labels into the key.
inline constexpr std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

// Counter-based splittable generator. Draw i of a stream with key k is
// mix64(k + i*phi), i.e. the SplitMix64 sequence seeded at k. Streams are
// derived by label (and optional index), so environment noise, action
// sampling and oracle randomness never share a counter.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : key_(mix64(seed ^ 0x6A09E667F3BCC909ull)) {}

  SplitRng stream(std::string_view label) const {
    return SplitRng(key_ ^ mix64(hash_label(label)), tag{});
  }
  SplitRng stream(std::string_view label, std::uint64_t index) const {
    return SplitRng(key_ ^ mix64(hash_label(label) + 0x9E3779B97F4A7C15ull * (index + 1)), tag{});
  }

  std::uint64_t next_u64() noexcept {
    counter_ += 0x9E3779B97F4A7C15ull;
    return mix64(key_ + counter_);
  }

  // uniform in [0,1)
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // uniform over {0,...,n-1}
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    int v = static_cast<int>(uniform() * n);
    return v < n ? v : n - 1;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  double gaussian() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Box-Muller
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Sample an index from an (approximately normalized) probability vector.
  int sample_discrete(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("sample_discrete: empty distribution");
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1);
  }

 private:
  struct tag {};
  SplitRng(std::uint64_t key, tag) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace squarecb
