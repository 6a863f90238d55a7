#pragma once

#include <cstdint>
#include <random>

#include "ldp/types.hpp"

namespace ldp {

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of replica `index` under master seed `seed`:
/// splitmix64(splitmix64(seed) ^ (index + 1)).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index + 1));
}

/// Caller-owned random stream. One per worker / replica; never shared.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream for_replica(std::uint64_t seed, std::uint64_t index) {
    return RandomStream(derive_seed(seed, index));
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  Vector normal_vector(Index dim) {
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) v[i] = normal();
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace ldp
