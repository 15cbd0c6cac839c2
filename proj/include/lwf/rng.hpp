// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

namespace lwf {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// FNV-1a over the bytes of a string; stable across platforms.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept
{
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Child seed for a named stage or sub-task.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) noexcept
{
    return mix64(seed ^ mix64(fnv1a(name)));
}

/// Child seed for the i-th item of a stream (scene i, chip i, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return mix64(seed ^ mix64(index ^ 0xD1B54A32D192ED03ull));
}

/// Counter-based generator: output n is mix64(key + n * golden). Any stream
/// can be split off by key without advancing the parent, and all derived
/// distributions are integer arithmetic or IEEE basic operations, so results
/// do not depend on the standard library implementation.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(mix64(key)) {}

    constexpr std::uint64_t next() noexcept
    {
        ++counter_;
        return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ull);
    }

    /// Uniform in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi].
    constexpr std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept
    {
        if (hi <= lo)
            return lo;
        const auto span = static_cast<unsigned __int128>(static_cast<std::uint64_t>(hi - lo) + 1);
        return lo + static_cast<std::int64_t>((static_cast<unsigned __int128>(next()) * span) >> 64);
    }

    constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Independent generator for sub-stream `index`.
    constexpr CounterRng split(std::uint64_t index) const noexcept
    {
        return CounterRng(derive_seed(key_, index));
    }

    constexpr std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace lwf
