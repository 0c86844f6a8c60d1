#pragma once

#include <cstdint>
#include <random>

namespace gridtune {

// Deterministic stream with an explicit normal draw so results do not depend
// on the standard library's unspecified std::normal_distribution algorithm.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // (0, 1], never zero so log() below is safe
    return (static_cast<double>(gen_()) + 1.0) * 0x1p-64;
  }

  double normal() {  // Box-Muller, two uniforms per draw, no caching
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace gridtune
