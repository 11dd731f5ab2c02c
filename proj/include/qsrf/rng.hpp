#pragma once

#include <cstdint>
#include <random>

namespace qsrf {

/// SplitMix64 step; the backbone of seed derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed. Every randomized
/// stage draws its own (stream, index) pair so that enabling or disabling
/// parallelism cannot change results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  std::uint64_t s = master;
  std::uint64_t a = splitmix64(s);
  s ^= stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
  std::uint64_t b = splitmix64(s);
  s ^= index * 0x9e3779b97f4a7c15ULL + 1;
  std::uint64_t c = splitmix64(s);
  return a ^ (b + (c << 1));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

/// Stable per-stage stream ids.
namespace stream {
constexpr std::uint64_t kSplit = 1;
constexpr std::uint64_t kSvd = 2;
constexpr std::uint64_t kKmeans = 3;
constexpr std::uint64_t kDict = 4;
constexpr std::uint64_t kRound = 5;
constexpr std::uint64_t kImportance = 6;
constexpr std::uint64_t kQaoa = 7;
constexpr std::uint64_t kForest = 8;
constexpr std::uint64_t kNegatives = 9;
constexpr std::uint64_t kSynthetic = 10;
constexpr std::uint64_t kEval = 11;
constexpr std::uint64_t kRepeat = 12;
}  // namespace stream

}  // namespace qsrf
