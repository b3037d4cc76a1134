#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qce {

/* Deterministic random layer. std:: distributions are not bit-reproducible
 * across standard library implementations, so uniforms and normals are
 * derived here from raw engine words. */

// SplitMix64: cheap keyed engine for counter-based substreams.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Combine stream keys into a substream seed (splitmix-style finalizer chain).
inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t k) {
  std::uint64_t z = h ^ (k + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

template <class Engine>
class BasicRng {
 public:
  explicit BasicRng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal, Box-Muller; the second value of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Unbiased uniform integer in [0, n) by masked rejection.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = ~0ull >> __builtin_clzll(n - 1 | 1);
    std::uint64_t v;
    do {
      v = next_u64() & mask;
    } while (v >= n);
    return v;
  }

 private:
  Engine eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Main generator for instance data (channel, symbols).
using Rng = BasicRng<std::mt19937_64>;
// Lightweight generator for keyed Monte Carlo substreams.
using StreamRng = BasicRng<SplitMix64>;

}  // namespace qce
