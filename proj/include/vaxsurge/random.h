#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace vaxsurge {

// Engine plus portable distributions. The standard distributions are
// implementation-defined, so seeded artifacts would differ between standard
// libraries; these helpers only depend on the engine's output sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  double normal();

  // Normal(0, stddev^2) resampled until it falls within +-2 stddev.
  double truncated_normal(double stddev);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Stateless 64-bit mixer for deriving independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace vaxsurge
