#pragma once

#include <array>
#include <cstdint>

namespace hiertau {

// SplitMix64 finalizer. Bijective avalanche over 64 bits; the building
// block for all seed derivation in this project.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Deterministic pseudo-random generator: xoshiro256++ with SplitMix64
// state expansion. The same seed yields the same stream on every
// platform; split(k) derives an independent child stream that depends
// only on (seed, k).
//
// Not thread-safe: each instance must be confined to one thread at a
// time, but may be moved between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = mix64(s++);
  }

  std::uint64_t next_u64() noexcept {
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

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Child stream k; deterministic in (seed(), k) and independent of any
  // draws already made from this generator.
  Rng split(std::uint64_t child_index) const noexcept {
    return Rng(mix64(seed_ + 0x9E3779B97F4A7C15ULL * (child_index + 1)));
  }

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace hiertau
