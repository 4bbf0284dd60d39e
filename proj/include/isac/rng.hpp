// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace isac {

/// Portable random stream.
///
/// The engine is the 32-bit Mersenne Twister (std::mt19937) seeded with
/// init_genrand(seed). Uniforms use the 53-bit construction
/// (a >> 5, b >> 6) -> (a * 2^26 + b) / 2^53, identical to
/// numpy.random.RandomState.random_sample. Normals use one Box-Muller
/// transform per pair of uniforms:
///
///     z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)
///
/// Nothing here depends on the standard library's distribution objects, so
/// streams are reproducible across compilers and can be replayed by a short
/// numpy script.
class Rng {
public:
    explicit Rng(std::uint32_t seed = 5489u) : engine_(seed) {}

    double uniform()
    {
        std::uint32_t a = engine_() >> 5;
        std::uint32_t b = engine_() >> 6;
        return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b)) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal()
    {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniform integer in [0, n) by rejection on 32-bit draws.
    std::uint32_t below(std::uint32_t n)
    {
        const std::uint32_t limit = 0xFFFFFFFFu - (0xFFFFFFFFu % n);
        std::uint32_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937 engine_;
};

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// 32-bit seed for sub-stream `index` of `base`.
constexpr std::uint32_t derive_seed(std::uint64_t base, std::uint64_t index)
{
    return static_cast<std::uint32_t>(splitmix64(splitmix64(base) ^ (index * 0xD1B54A32D192ED03ull)) >> 32);
}

} // namespace isac
