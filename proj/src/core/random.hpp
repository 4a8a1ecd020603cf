#pragma once

#include <cstdint>
#include <random>

namespace spikeyolo {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept { return splitmix64(a ^ splitmix64(b)); }

// Every random stream in the library is an mt19937_64 keyed by an explicit
// seed and a stream tag, so no two consumers share state.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(hash_combine(seed, stream));
}

// std::uniform_real_distribution is implementation-defined; this is not.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

}  // namespace spikeyolo
