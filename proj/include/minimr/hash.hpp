#pragma once

#include <cstdint>
#include <string_view>

namespace minimr {

// FNV-1a, 64 bit. Pinned so that partition indices, bucket assignments and
// every metric derived from them are reproducible across builds and runs.
inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t basis = kFnvOffsetBasis) {
    std::uint64_t h = basis;
    for (char c : bytes) {
        h ^= static_cast<std::uint8_t>(c);
        h *= kFnvPrime;
    }
    return h;
}

// Salted basis for node-cache bucket placement. Same hash family as the
// partitioner but offset, so bucket index and reducer index of a key are
// uncorrelated.
inline constexpr std::uint64_t kBucketBasis =
    kFnvOffsetBasis ^ 0x9e3779b97f4a7c15ULL;

}  // namespace minimr
