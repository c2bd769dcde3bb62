#pragma once

// Counter-based pseudo-random draws. Sample i of a check is a pure function of
// (seed, i), so sampled results do not depend on evaluation order or threads.

#include <cstdint>

namespace carrylab {

// Seed used by every sampled associativity / equivalence check.
inline constexpr std::uint64_t kSamplingSeed = 0x5eed'c0ffee'2024ULL;

// Exhaustive checks run up to this many items; above it they switch to sampling.
inline constexpr std::uint64_t kExhaustiveLimit = 2'000'000;
inline constexpr std::uint64_t kAssociativitySamples = 20'000;
inline constexpr std::uint64_t kEquivalenceSamples = 10'000;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t counter) {
  return splitmix64(splitmix64(seed) ^ (counter * 0xd1b54a32d192ed03ULL));
}

// Uniform integer in [0, n) from a 64-bit hash (Lemire's multiply-shift).
inline std::uint32_t bounded(std::uint64_t hash, std::uint32_t n) {
  return static_cast<std::uint32_t>((static_cast<unsigned __int128>(hash) * n) >> 64);
}

enum class CheckMode { Exhaustive, Sampled };

inline const char* to_string(CheckMode mode) {
  return mode == CheckMode::Exhaustive ? "exhaustive" : "sampled";
}

}  // namespace carrylab
