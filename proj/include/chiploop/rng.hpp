#pragma once

#include <cstdint>
#include <random>

namespace chiploop {

// Seeded generator with a platform-independent bounded draw. The engine's raw
// output is fixed by the standard; std::uniform_int_distribution is not, so
// bounded draws use rejection sampling here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace chiploop
