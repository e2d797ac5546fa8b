#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ascetic {

// Deterministic RNG: mt19937_64 core (sequence pinned by the standard) with
// hand-rolled distributions, because std::uniform_*_distribution output is
// implementation-defined and would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, n), Lemire multiply-shift
  std::uint64_t bounded(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(m >> 64);
  }

  // inclusive [lo, hi]
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(bounded(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // [0, 1) with 53 random bits
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // independent child stream derived from the original seed, not the current
  // state, so derivation order never matters
  Rng sub(std::uint64_t salt) const { return Rng(mix(seed_ ^ mix(salt + 0x9E3779B97F4A7C15ull))); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = bounded(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t mix(std::uint64_t x) {  // splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace ascetic
