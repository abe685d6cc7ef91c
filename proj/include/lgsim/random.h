#pragma once

#include <compare>
#include <cstdint>
#include <limits>

namespace lgsim {

/// Identifies one independent random stream. Two streams with different
/// (key, lane) pairs never share state; the pair itself is the seed.
struct StreamSeed {
    std::uint64_t key = 0;
    std::uint64_t lane = 0;

    friend auto operator<=>(const StreamSeed&, const StreamSeed&) = default;
};

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based generator: the n-th output is a pure function of (seed, n),
/// so streams can be created in any order on any thread. Satisfies
/// UniformRandomBitGenerator for use with <random> distributions.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(StreamSeed seed) noexcept
        : base_(mix64(seed.key ^ mix64(seed.lane ^ 0x6a09e667f3bcc909ULL))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        ++counter_;
        return mix64(base_ + counter_ * 0xd1b54a32d192ed03ULL);
    }

    /// Uniform variate in [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

}  // namespace lgsim
