#pragma once

#include <cstdint>
#include <cmath>

namespace camta {

// Deterministic PRNG used everywhere randomness is needed. We avoid the
// std::<distribution> classes because their output is implementation-defined;
// all draws here are reproducible bit-for-bit from the seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n) {
    // rejection sampling to kill modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do { v = next_u64(); } while (v >= limit);
    return v % n;
  }

  // standard normal via Box-Muller (no cached second value, keeps state simple)
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

// Counter-based derivation: a named stream of a master seed. Parallel and
// serial traversals that derive the same (seed, stream, counter) agree.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t counter = 0) {
  Rng h(master ^ (stream * 0xd1342543de82ef95ULL) ^ (counter * 0x2545f4914f6cdd1dULL));
  return h.next_u64();
}

}  // namespace camta
