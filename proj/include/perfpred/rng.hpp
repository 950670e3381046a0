#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace perfpred {

/// Deterministic, portable RNG (xoshiro256** seeded via splitmix64).
/// std::shuffle / std::uniform_*_distribution are implementation-defined,
/// so everything that must reproduce bit-exactly across toolchains goes
/// through this class.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform01();

  /// Unbiased uniform integer in [0, n); n must be > 0.
  uint64_t below(uint64_t n);

  /// Standard normal deviate (Box-Muller, spare cached).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (size_t i = v.size() - 1; i > 0; --i) {
      size_t j = static_cast<size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Stable 64-bit seed derivation: mixes a base seed with a textual tag
/// (e.g. "forest/17" or "curve/rep3") so subsystems get independent streams.
uint64_t derive_seed(uint64_t base, std::string_view tag);

}  // namespace perfpred
