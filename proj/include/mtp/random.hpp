#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mtp {

/// Uniform in [lo, hi) from raw engine draws; identical sequence on every
/// standard library.
inline double rand_uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng()) / 18446744073709551616.0;
    return lo + u * (hi - lo);
}

/// Standard normal via Box-Muller on raw engine draws.
inline double rand_gaussian(std::mt19937_64& rng) {
    const double u1 =
        (static_cast<double>(rng()) + 1.0) / 18446744073709551616.0;
    const double u2 = static_cast<double>(rng()) / 18446744073709551616.0;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// splitmix64; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace mtp
