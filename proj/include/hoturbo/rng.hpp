#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hoturbo {

/// SplitMix64 finalizer; the mixing step used for all seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a sequence of stream tags.
/// Every component that needs randomness gets its seed through this so that
/// one top-level seed determines a whole run.
inline std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t s = splitmix64(parent);
  for (auto t : tags) s = splitmix64(s ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return s;
}

using Rng = std::mt19937_64;

// Stream tags, one per consumer. Values are arbitrary but frozen.
namespace stream {
inline constexpr std::uint64_t kShadow = 1;
inline constexpr std::uint64_t kFastFade = 2;
inline constexpr std::uint64_t kEpisode = 3;
inline constexpr std::uint64_t kGpFit = 4;
inline constexpr std::uint64_t kCandidates = 5;
inline constexpr std::uint64_t kThompson = 6;
inline constexpr std::uint64_t kRestart = 7;
inline constexpr std::uint64_t kTransferMix = 8;
inline constexpr std::uint64_t kRandomSearch = 9;
inline constexpr std::uint64_t kDesign = 10;
inline constexpr std::uint64_t kEvalSeeds = 11;
}  // namespace stream

}  // namespace hoturbo
