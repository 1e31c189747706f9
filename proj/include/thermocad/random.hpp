#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace thermocad {

// std::mt19937_64 output is fixed by the standard, but std::shuffle and the
// standard distributions are not; these helpers keep seeded results identical
// across standard library implementations.

// Uniform integer in [0, bound) by rejection sampling.
[[nodiscard]] inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound)
{
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = 0;
    do {
        draw = rng();
    } while (draw >= limit);
    return draw % bound;
}

// Fisher-Yates shuffle.
template <class T>
void seeded_shuffle(std::span<T> items, std::mt19937_64& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace thermocad
