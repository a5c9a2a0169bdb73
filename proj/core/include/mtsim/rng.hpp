#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace mtsim {

// All randomness flows through this wrapper so that draws are reproducible
// bit-for-bit for a given seed, independent of platform library details.
// Bounded draws deliberately avoid std::uniform_int_distribution, whose
// output is not pinned by the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n). Rejection sampling keeps the draw unbiased.
  std::uint32_t uniform_u32(std::uint32_t n) {
    if (n <= 1) return 0;
    const std::uint64_t span = 0x1'0000'0000ULL;
    const std::uint64_t limit = span - span % n;
    for (;;) {
      std::uint64_t v = engine_() >> 32;
      if (v < limit) return static_cast<std::uint32_t>(v % n);
    }
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform_double(double lo, double hi) {
    return lo + (hi - lo) * uniform_double();
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_u32(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// splitmix64; used to derive independent per-purpose and per-vehicle seeds
// from the single run seed.
constexpr std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Fixed stream ids for the independent random streams of one run.
namespace rng_stream {
inline constexpr std::uint64_t kPlacement = 1;
inline constexpr std::uint64_t kStepPermutation = 2;
inline constexpr std::uint64_t kModelAssignment = 3;
inline constexpr std::uint64_t kVehicleBase = 1000;    // + vehicle id
inline constexpr std::uint64_t kLearnerBase = 500000;  // + vehicle id
}  // namespace rng_stream

}  // namespace mtsim
