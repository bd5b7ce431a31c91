#pragma once

#include <cstdint>

namespace mtf {

// Sub-seed streams split from one master seed.
enum class SeedStream : std::uint64_t { Generator = 1, KMeansInit = 2, KMeansExtract = 3 };

/// splitmix64 finalizer over (seed, stream, index).
constexpr std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream,
                                    std::uint64_t index = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(stream) * 1000003ULL + index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mtf
