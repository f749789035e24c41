#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "intentcap/digest.hpp"

namespace intentcap {

// std distributions are implementation-defined; these helpers only use the
// raw mt19937_64 stream so that seeded draws are identical on every platform.
using Rng = std::mt19937_64;

/// Uniform integer in [0, bound) by rejection sampling.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

/// Uniform double in [0, 1) with 53 bits of randomness.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Seed for one unit of work derived from the master seed and its coordinates,
/// so parallel and serial runs draw identical streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t level, std::uint64_t index) {
  return stable_hash64(std::to_string(master) + "/" + std::to_string(level) + "/" +
                       std::to_string(index));
}

/// First `count` entries of a Fisher-Yates shuffle of [0, n).
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n,
                                                           std::size_t count) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  const std::size_t k = count < n ? count : n;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace intentcap
