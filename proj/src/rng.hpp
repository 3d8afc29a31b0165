#pragma once

#include <cstdint>

namespace halmarket::detail {

// SplitMix64. One independent stream per simulated lifetime, derived from the
// master seed and the lifetime's index, so draws never depend on scheduling.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDull;
    z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ull;
    return z ^ (z >> 33);
}

inline SplitMix64 stream_for(std::uint64_t master_seed, std::uint64_t index) {
    return SplitMix64{mix64(master_seed + 0x9E3779B97F4A7C15ull * (index + 1))};
}

}  // namespace halmarket::detail
