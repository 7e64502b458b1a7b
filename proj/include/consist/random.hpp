#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace consist {

std::uint64_t splitmix64(std::uint64_t& state);

/// Reproducible random stream: std::mt19937_64 seeded through SplitMix64 from
/// (seed, stream). Distinct streams are independent for practical purposes,
/// so work split across threads by stream index gives identical results.
///
/// Variates are produced by fixed transforms (53-bit uniforms, Box-Muller
/// normals) rather than std:: distributions, whose algorithms are left to the
/// standard library implementation.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal.
  double normal();
  /// Uniform integer on [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace consist
