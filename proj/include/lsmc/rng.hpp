#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Deterministic random number plumbing.
//
// Every consumer gets its own engine derived from (seed, stream tag, index),
// so results do not depend on evaluation order or thread count, and the
// sequences are reproducible bit-for-bit across platforms.  mt19937_64 seeded
// from a single 64-bit value is fully specified by the standard; the uniform
// and normal transforms below are hand-rolled because the std distribution
// objects are not.

namespace lsmc::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class Stream : std::uint64_t {
  market = 1,     // return panel simulation
  controls = 2,   // forward-pass control randomization
  surface = 3,    // synthetic test surfaces
  fixture = 4,    // synthetic model generation
};

/// Engine for substream `index` of purpose `tag` under a user seed.
inline std::mt19937_64 substream(std::uint64_t seed, Stream tag, std::uint64_t index) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s ^= static_cast<std::uint64_t>(tag) * 0xd6e8feb86659fd93ULL;
  h ^= splitmix64(s);
  s ^= index * 0xa3b195354a39b70dULL;
  h ^= splitmix64(s);
  return std::mt19937_64{h};
}

/// Uniform draw on [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Standard normal sampler (Box-Muller, pairs cached).
class NormalSampler {
 public:
  explicit NormalSampler(std::mt19937_64 eng) : eng_(eng) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01(eng_);
    while (u1 <= 0.0) u1 = uniform01(eng_);  // log(0) guard
    const double u2 = uniform01(eng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace lsmc::rng
