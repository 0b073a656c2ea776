#pragma once

#include <cstdint>
#include <random>

namespace mpmab {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive well-separated substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ull + b));
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                 std::uint64_t d) {
  return mix_seed(mix_seed(a, b, c), d);
}

inline Rng substream(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                     std::uint64_t c = 0) {
  return Rng(mix_seed(base, a, b, c));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace mpmab
