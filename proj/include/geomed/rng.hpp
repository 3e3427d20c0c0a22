#ifndef GEOMED_RNG_HPP
#define GEOMED_RNG_HPP

#include <cstdint>

namespace geomed {

// xoshiro256** 1.0 seeded through splitmix64. The output sequence, the
// stream derivation in split() and the normal sampler are part of the
// reproducibility contract: changing any of them changes every experiment.
class Rng {
 public:
  static constexpr int kVersion = 1;

  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, bound), bound > 0, unbiased (Lemire).
  std::uint64_t uniform_index(std::uint64_t bound);

  // Standard normal by the Marsaglia polar method.
  double normal();

  // Independent stream keyed by (seed, index).
  static Rng split(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace geomed

#endif  // GEOMED_RNG_HPP
