#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace wdn {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a list of integers into one seed. Order matters.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x51ed270b27a1f3c5ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

// Stream tags keep train/eval/history/case draws disjoint for the same seed.
namespace stream {
inline constexpr std::uint64_t kNetwork = 0x4e4554;
inline constexpr std::uint64_t kDemand = 0x44454d;
inline constexpr std::uint64_t kHistory = 0x484953;
inline constexpr std::uint64_t kTrain = 0x545241;
inline constexpr std::uint64_t kEval = 0x45564c;
inline constexpr std::uint64_t kHybrid = 0x485942;
inline constexpr std::uint64_t kInit = 0x494e49;
}  // namespace stream

}  // namespace wdn
