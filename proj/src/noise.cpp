#include "fsilab/noise.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace fsilab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0x9E3779B97F4A7C15ULL));
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

BrownianPath::BrownianPath(std::uint64_t seed, double horizon, int base_steps, int levels)
    : seed_(seed), horizon_(horizon), base_steps_(base_steps) {
  if (!(horizon > 0.0) || base_steps < 1 || levels < 0) throw std::invalid_argument("BrownianPath: bad grid");
  increments_.resize(levels + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  {
    std::mt19937_64 gen(derive_seed(seed, 0));
    double sd = std::sqrt(horizon / base_steps);
    auto& inc = increments_[0];
    inc.resize(base_steps);
    for (auto& x : inc) x = sd * normal(gen);
  }
  for (int l = 1; l <= levels; ++l) {
    std::mt19937_64 gen(derive_seed(seed, std::uint64_t(l)));
    normal.reset();
    const auto& coarse = increments_[l - 1];
    auto& fine = increments_[l];
    fine.resize(2 * coarse.size());
    // bridge midpoint over an interval of length 2h has conditional variance h/2
    double h = horizon / (double(base_steps) * std::ldexp(1.0, l));
    double sd = std::sqrt(0.5 * h);
    for (std::size_t j = 0; j < coarse.size(); ++j) {
      double first = 0.5 * coarse[j] + sd * normal(gen);
      fine[2 * j] = first;
      fine[2 * j + 1] = coarse[j] - first;
    }
  }
}

int BrownianPath::steps(int level) const {
  if (level < 0 || level > levels()) throw std::out_of_range("BrownianPath: level");
  return int(increments_[level].size());
}

const std::vector<double>& BrownianPath::increments(int level) const {
  if (level < 0 || level > levels()) throw std::out_of_range("BrownianPath: level");
  return increments_[level];
}

const std::vector<double>& BrownianPath::increments_for_steps(int steps) const {
  for (int l = 0; l <= levels(); ++l)
    if (int(increments_[l].size()) == steps) return increments_[l];
  throw std::out_of_range("BrownianPath: no level with " + std::to_string(steps) + " steps");
}

double BrownianPath::value(int level, int j) const {
  const auto& inc = increments(level);
  double b = 0.0;
  for (int i = 0; i < j; ++i) b += inc[i];
  return b;
}

std::vector<BrownianPath> make_paths(std::uint64_t seed, int modes, double horizon, int base_steps, int levels) {
  std::vector<BrownianPath> out;
  for (int m = 0; m < modes; ++m) out.emplace_back(derive_seed(seed, 1000 + m), horizon, base_steps, levels);
  return out;
}

}  // namespace fsilab
