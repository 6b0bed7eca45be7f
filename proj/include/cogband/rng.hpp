#pragma once

// All randomness goes through std::mt19937_64, whose output sequence is fixed
// by the C++ standard, and through the conversions below rather than the
// implementation-defined <random> distributions. Traces are therefore
// bit-identical across compilers and machines for a given seed.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace cogband {

using Rng = std::mt19937_64;

inline constexpr std::string_view kRngAlgorithm = "mt19937_64";

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p)
{
    return uniform01(rng) < p;
}

/// Exponential variate with the given mean, by inversion.
inline double exponential(Rng& rng, double mean)
{
    return -mean * std::log1p(-uniform01(rng));
}

} // namespace cogband
