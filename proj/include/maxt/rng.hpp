#pragma once

#include <cstdint>
#include <random>

#include "maxt/distributions.hpp"

namespace maxt {

// splitmix64 step; also used to hash-combine seeds for counter-based
// stream splitting so parallel work is schedule-independent.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (0x2545f4914f6cdd1dULL * (stream + 1)));
}

// Deterministic random stream: mt19937_64 with uniforms mapped to normals
// by inversion, so a fixed seed yields a bit-identical sample sequence.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0, 1), never returning an exact endpoint.
  double uniform01() {
    const double u = (next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double normal() { return norm_quantile(uniform01()); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace maxt
