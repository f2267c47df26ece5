#pragma once

/// @file noise.hpp
/// @brief Seeded Brownian paths with dyadic Brownian-bridge refinement.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fsilab {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of stream `index` under `master`:
///   splitmix64(master ^ splitmix64(index + 0x9E3779B97F4A7C15)).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
/// 64-bit FNV-1a over raw bytes, continuing from `h`.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = kFnvOffset);

/// Brownian path on [0, T] generated on `base_steps` coarse increments and refined
/// dyadically `levels` times.  Level l has base_steps * 2^l increments; level l+1 is
/// obtained from level l by sampling the bridge midpoint of every interval, so every
/// level is a restriction of the finest one.
class BrownianPath {
 public:
  BrownianPath() = default;
  BrownianPath(std::uint64_t seed, double horizon, int base_steps, int levels);

  std::uint64_t seed() const { return seed_; }
  double horizon() const { return horizon_; }
  int levels() const { return int(increments_.size()) - 1; }
  int steps(int level) const;
  double dt(int level) const { return horizon_ / steps(level); }
  const std::vector<double>& increments(int level) const;
  /// Increments on a grid of `steps` intervals; steps must be base_steps * 2^l.
  const std::vector<double>& increments_for_steps(int steps) const;
  /// B(t) at grid point j of the given level.
  double value(int level, int j) const;

 private:
  std::uint64_t seed_ = 0;
  double horizon_ = 1.0;
  int base_steps_ = 1;
  std::vector<std::vector<double>> increments_;
};

/// Independent paths for several noise modes, all on the same grid ladder.
std::vector<BrownianPath> make_paths(std::uint64_t seed, int modes, double horizon, int base_steps, int levels);

}  // namespace fsilab
