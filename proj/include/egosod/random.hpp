#pragma once

#include <cstdint>
#include <string_view>

namespace egosod {

/// SplitMix64 finalizer. Bijective on 64-bit values.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// 64-bit FNV-1a; stable across platforms, used to fold string keys into streams.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Maps 64 random bits to a double in [0, 1) using the top 53 bits.
constexpr double unit_double(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// A counter-based stream: output i depends only on (key, i), so draws are
/// independent of evaluation order and thread scheduling. The arithmetic is
/// fixed-width, so streams are identical across platforms and standard libraries.
class CounterStream {
public:
    constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(mix64(key)) {}
    constexpr CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ull))) {}

    constexpr std::uint64_t next_u64() noexcept { return mix64(key_ ^ mix64(counter_++)); }
    constexpr double next_double() noexcept { return unit_double(next_u64()); }
    constexpr bool bernoulli(double p) noexcept { return next_double() < p; }

    /// Uniform integer in [0, bound) by rejection; bound > 0.
    constexpr std::uint64_t next_below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % bound;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace egosod
