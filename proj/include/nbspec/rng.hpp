#pragma once

#include <cstdint>
#include <random>

namespace nbspec {

// SplitMix64 step. Used for seed whitening and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream derivation: stream k of a master seed is a pure
// function of (master, k), so adding streams never perturbs existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t state = master;
  splitmix64(state);
  state ^= 0xd1b54a32d192ed03ULL * (stream + 1);
  std::uint64_t z = splitmix64(state);
  splitmix64(state);
  return z ^ splitmix64(state);
}

// Two-level derivation for (cell, replicate) style experiments.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t substream) {
  return derive_seed(derive_seed(master, stream), substream);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace nbspec
