#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace subgeo {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based derivation of a per-replicate generator: the stream depends
/// only on (master, replicate), never on scheduling.
inline Rng seed_derive(std::uint64_t master, std::uint64_t replicate) {
  const std::uint64_t a = mix64(master ^ mix64(replicate + 0x632be59bd9b4e019ULL));
  const std::uint64_t b = mix64(a + replicate);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

/// Uniform on [0,1) with 53 random bits; unlike std::uniform_real_distribution
/// its output is fixed across standard library implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Standard normal by Marsaglia's polar method (implementation-independent).
inline double std_normal(Rng& rng) {
  for (;;) {
    const double u = 2 * uniform01(rng) - 1, v = 2 * uniform01(rng) - 1;
    const double s = u * u + v * v;
    if (s > 0 && s < 1) return u * std::sqrt(-2 * std::log(s) / s);
  }
}

}  // namespace subgeo
