#pragma once

#include <cstdint>
#include <random>

namespace choicenet {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent seed streams from one
// experiment seed: derive_seed(seed, k) for worker/trial k.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

}  // namespace choicenet
