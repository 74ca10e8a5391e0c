// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <cstdint>

namespace riskeig {

// Counter-based generator in the splitmix64 family.  Each (seed, stream) pair
// yields an independent sequence that does not depend on how many draws other
// streams made, so per-path simulation is reproducible under any scheduling.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ 0x9E3779B97F4A7C15ULL) ^ mix(stream + 0xD1B54A32D192ED03ULL)) {}

  std::uint64_t next_u64() {
    std::uint64_t z = key_ + (++ctr_) * 0x9E3779B97F4A7C15ULL;
    return mix(z);
  }

  // Uniform on (0, 1]; never returns 0 so -log() is always finite.
  double next_unit() {
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1p-53;
  }

  double next_exponential(double rate) { return -std::log(next_unit()) / rate; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace riskeig
