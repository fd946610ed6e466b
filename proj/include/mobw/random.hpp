#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mobw {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; decorrelates seeds that differ in a few bits.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream number `index` of a master seed. Streams depend only on
// (master, index), so parallel work partitioned by index is reproducible for
// any worker count.
inline Rng make_stream(std::uint64_t master, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(mix_seed(index)),
                    static_cast<std::uint32_t>(mix_seed(index) >> 32)};
  return Rng(seq);
}

// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double standard_exponential(Rng& rng) { return -std::log(uniform_open(rng)); }

// Log of a Gamma(shape, 1) variate. Small shapes use the boost
// G(a) = G(a + 1) * U^(1/a) in log space, so draws never underflow to zero.
inline double log_gamma_variate(Rng& rng, double shape) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return std::log(dist(rng));
  }
  std::gamma_distribution<double> dist(shape + 1.0, 1.0);
  return std::log(dist(rng)) + std::log(uniform_open(rng)) / shape;
}

}  // namespace mobw
