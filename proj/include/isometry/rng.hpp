#pragma once

#include <cstdint>
#include <limits>

namespace isometry {

// Counter-based generator: SplitMix64 over an incrementing counter. Cheap to
// seed, no warm-up, and two generators with the same seed produce the same
// stream regardless of what other generators did in between — which is what
// makes per-trial subseeding (seed XOR trial index) reproducible independent
// of scheduling order. Satisfies std::uniform_random_bit_generator, so the
// standard <random> distributions layer on top.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace isometry
