#pragma once

// Seeded generator hierarchy. Each (module, instance) pair gets its own
// stream derived from the run seed, so adding a vehicle never perturbs the
// draws of the others. Standard-library distributions are not bit-portable
// across implementations, so the generator and the distributions are pinned
// here (splitmix64 seeding + xoshiro256++ core, Box-Muller normals).

#include <cstdint>
#include <cmath>
#include <string_view>

namespace sky {

namespace detail {

inline uint64_t splitmix64(uint64_t& s) {
  uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

class Rng {
 public:
  Rng() : Rng(0x5eed) {}
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& word : state_) word = detail::splitmix64(s);
  }

  // xoshiro256++
  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Bernoulli with probability p.
  bool chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }

  // Standard normal via Box-Muller; draws are consumed in pairs.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  uint64_t state_[4]{};
  double spare_{0.0};
  bool have_spare_{false};
};

// Derives independent per-(module, instance) streams from one run seed.
class RngHierarchy {
 public:
  explicit RngHierarchy(uint64_t run_seed) : run_seed_(run_seed) {}

  Rng stream(std::string_view module, uint32_t instance = 0) const {
    uint64_t mix = run_seed_;
    mix ^= detail::fnv1a(module) + 0x9e3779b97f4a7c15ULL;
    mix ^= (static_cast<uint64_t>(instance) << 32) | 0xA5A5u;
    uint64_t s = mix;
    return Rng(detail::splitmix64(s));
  }

  uint64_t run_seed() const { return run_seed_; }

 private:
  uint64_t run_seed_;
};

}  // namespace sky
