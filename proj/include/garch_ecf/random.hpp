#pragma once

#include <cstdint>

namespace garch_ecf {

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31U);
}

/// Counter-based stream seed for replication `index` under `master`. The
/// result is kept in the nonnegative int64 range accepted by the samplers.
[[nodiscard]] constexpr std::int64_t derive_seed(std::int64_t master, std::uint64_t index) noexcept {
    const std::uint64_t mixed =
        splitmix64(splitmix64(static_cast<std::uint64_t>(master)) ^ splitmix64(index + 1));
    return static_cast<std::int64_t>(mixed >> 1U);
}

}  // namespace garch_ecf
