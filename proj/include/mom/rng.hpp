#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mom {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to fan a master seed out into independent streams.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(base);
  for (auto t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

// Stream tags so call sites read as derive_seed(seed, {tag::kData, subject}).
namespace tag {
inline constexpr std::uint64_t kData = 0x1001;
inline constexpr std::uint64_t kTrajectory = 0x1002;
inline constexpr std::uint64_t kNoise = 0x1003;
inline constexpr std::uint64_t kTrain = 0x1004;
inline constexpr std::uint64_t kInit = 0x1005;
inline constexpr std::uint64_t kShuffle = 0x1006;
inline constexpr std::uint64_t kBatch = 0x1007;
inline constexpr std::uint64_t kEval = 0x1008;
inline constexpr std::uint64_t kCalibration = 0x1009;
}  // namespace tag

}  // namespace mom
