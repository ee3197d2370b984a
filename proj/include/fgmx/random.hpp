#pragma once

// Counter-based SplitMix64: the i-th draw of a stream is a pure function of
// (seed, stream, i), so blocks can be generated in any order or in parallel.

#include <cstdint>

namespace fgmx {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// 64 random bits for draw `counter` of `stream` under `seed`.
inline constexpr std::uint64_t random_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
    return splitmix64(splitmix64(seed ^ splitmix64(stream)) + counter * 0x9e3779b97f4a7c15ULL);
}

/// Maps 64 bits to the open interval (0, 1) using the top 53 bits.
inline constexpr double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

class CounterRng {
public:
    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t start = 0) noexcept
        : seed_(seed), stream_(stream), counter_(start) {}

    constexpr double next() noexcept { return to_open_unit(random_bits(seed_, stream_, counter_++)); }
    constexpr std::uint64_t next_bits() noexcept { return random_bits(seed_, stream_, counter_++); }
    constexpr std::uint64_t position() const noexcept { return counter_; }

    /// Uniform on [lo, hi).
    constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next(); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_;
};

} // namespace fgmx
