#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace deeptarget {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the `ordinal`-th independent stream under `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t ordinal) {
  return mix_seed(mix_seed(base) ^ mix_seed(ordinal + 0x632be59bd9b4e019ULL));
}

/// Uniform integer in [0, bound] inclusive, unbiased (rejection on the top range).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t range = bound + 1;
  if (range == 0) return rng();
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % range;
}

/// Uniform real in [0, 1) built from the top 53 bits; stable across standard libraries.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace deeptarget
