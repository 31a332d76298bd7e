#pragma once

#include <cstdint>
#include <random>

namespace nplap {

// splitmix64; used to derive independent substreams from a user seed so that
// results do not depend on thread count or evaluation order.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(mix64(mix64(seed) ^ mix64(stream + 0x51ed270b0f4dull)));
}

}  // namespace nplap
