#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace noisyarm {

// splitmix64 finalizer; used for seed derivation so every consumer gets an
// independent, reproducible stream.
std::uint64_t mix64(std::uint64_t x);

// Combine a seed with one more coordinate (integer or string tag).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t v);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag);

// Deterministic RNG with fixed-algorithm distributions. std::mt19937_64 is
// fully specified by the standard; the std distributions are not, so the
// uniform/normal/shuffle implementations here are our own.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace noisyarm
