#pragma once

#include <cstdint>

#include "noisy_stm/types.hpp"

namespace noisy_stm {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of run `run_index` on sweep axis position `axis_index`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run_index,
                                    std::uint64_t axis_index) {
  return mix64(mix64(mix64(master) ^ run_index) ^ (axis_index * 0xD1B54A32D192ED03ULL));
}

/// Counter-based stream: draw i is mix64(key + i * golden). Normals use
/// Box-Muller on two 53-bit uniforms, so streams only depend on the seed and
/// the libm log/cos/sin/sqrt.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : key_(mix64(seed)) {}

  std::uint64_t next_u64() {
    return mix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();

  Vector normal_vector(Eigen::Index n);

  /// Uniform on the unit sphere of R^n (normalized Gaussian).
  Vector unit_sphere(Eigen::Index n);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace noisy_stm
