#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "cscn/tensor.hpp"

namespace cscn {

// Seeded random source with a reproducible stream. std::mt19937_64 emits a
// bit-exact sequence on every conforming platform; uniforms and normals are
// fixed transforms of that sequence (53-bit mantissa scaling and Box-Muller),
// so everything derived from a seed regenerates identically.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal, Box-Muller; generates pairs and caches the second value.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.28318530717958647692528676655900577 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Unbiased draw from [0, n), rejection on the tail of the 64-bit range.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ConfigError("SeededRng::below: n must be positive");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t rem = (max % n + 1) % n;
    std::uint64_t x = next_u64();
    while (rem != 0 && x > max - rem) x = next_u64();
    return x % n;
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64 of (base, stream); decorrelates the per-purpose seeds a run
// derives from one user-facing seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Fisher-Yates; spelled out because std::shuffle's draw pattern is
// implementation-defined.
template <typename T>
void seeded_shuffle(std::vector<T>& v, SeededRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

template <typename T>
TensorT<T> random_normal_tensor(const Shape& shape, SeededRng& rng, double stddev) {
  TensorT<T> t(shape);
  for (auto& v : t) v = static_cast<T>(rng.normal() * stddev);
  return t;
}

template <typename T>
TensorT<T> random_uniform_tensor(const Shape& shape, SeededRng& rng, double lo, double hi) {
  TensorT<T> t(shape);
  for (auto& v : t) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

}  // namespace cscn
