#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace branchsim {

/// Deterministic xoshiro256++ stream with splitmix64 seeding.
///
/// Replicas must draw from disjoint streams: use Rng::substream(seed, index)
/// so that results are reproducible independently of the worker count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed;
    std::uint64_t a = splitmix64(x);
    // fold the stream index through a second splitmix pass
    std::uint64_t y = stream + 0x9e3779b97f4a7c15ULL;
    return Rng(a ^ splitmix64(y));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1); safe as a quantile-transform argument.
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  /// Exp(1).
  double exponential() { return -std::log(uniform_open()); }

  /// Standard normal (Box-Muller, no caching so replay is position-independent).
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform_open()));
    const double theta = 6.283185307179586476925286766559 * uniform();
    return r * std::cos(theta);
  }

  /// Index k with cum[k-1] <= u < cum[k]; cum must end at ~1.
  std::size_t categorical(std::span<const double> cum) {
    const double u = uniform();
    std::size_t lo = 0, hi = cum.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cum[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }

  std::uint64_t poisson(double mean);

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace branchsim
