// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random numbers. Every draw is a pure function of a 64-bit
// key and a 128-bit counter, so trials can run in any order or on any number
// of workers and still see the same variates.

#pragma once

#include <array>
#include <cstdint>

namespace harq_noma {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3").
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter generate(Counter ctr, Key key) {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

    static constexpr Key key_from_seed(std::uint64_t seed) {
        return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Maps two 32-bit words onto a double in (0, 1] with 53 bits of precision.
constexpr double to_unit_open_closed(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

/// Uniform (0, 1] draw addressed by (seed, index, a, b). `index` is usually
/// the trial or sample number; `a` and `b` select the stream within it.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t index, std::uint32_t a, std::uint32_t b) {
    const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(index),
                                     static_cast<std::uint32_t>(index >> 32), a, b};
    const auto out = Philox4x32::generate(ctr, Philox4x32::key_from_seed(seed));
    return to_unit_open_closed(out[0], out[1]);
}

} // namespace harq_noma
