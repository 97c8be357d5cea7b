#pragma once

// Deterministic random streams.
//
// Every Monte Carlo work unit owns a Stream derived from (master_seed, index,
// phase) through SplitMix64 hashing, so results do not depend on how work is
// scheduled across threads. Variate generators are implemented here rather
// than taken from <random> because the standard distributions are not
// specified bit-for-bit and differ between library vendors.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace betachart {

/// SplitMix64 step; also used as a 64-bit mixing function.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256** generator. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  /// Independent stream for work unit `index` (and an optional sub-phase)
  /// under `master_seed`.
  static Stream derive(std::uint64_t master_seed, std::uint64_t index,
                       std::uint64_t phase = 0) noexcept {
    std::uint64_t h = master_seed;
    std::uint64_t key = splitmix64(h);
    h = key ^ index;
    key = splitmix64(h);
    h = key ^ (phase * 0xD1B54A32D192ED03ULL);
    return Stream(splitmix64(h));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal variate (Marsaglia polar method).
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// ln of a Gamma(shape, 1) variate.
///
/// Marsaglia-Tsang squeeze/rejection for shape >= 1. For shape < 1 the
/// boosting identity G(a) = G(a + 1) * U^(1/a) is applied in log space so
/// very small shapes do not underflow.
inline double log_gamma_variate(Stream& rng, double shape) {
  if (shape < 1.0) {
    const double boosted = log_gamma_variate(rng, shape + 1.0);
    return boosted + std::log(rng.uniform()) / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

inline double gamma_variate(Stream& rng, double shape) {
  return std::exp(log_gamma_variate(rng, shape));
}

}  // namespace betachart
