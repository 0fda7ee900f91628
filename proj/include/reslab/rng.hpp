#pragma once

#include <cstdint>
#include <random>

namespace reslab {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Stream s of master seed m is seeded with
// split_seed(m, s); streams for distinct s are decorrelated.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng(split_seed(master, stream));
}

}  // namespace reslab
