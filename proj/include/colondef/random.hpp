#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace colondef {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a substream key from a parent key and a list of indices, so that
/// (seed, tree, node) style keys give independent streams.
constexpr std::uint64_t derive_key(std::uint64_t key, std::initializer_list<std::uint64_t> path) {
    for (auto v : path) key = mix64(key ^ mix64(v + 0x632be59bd9b4e019ULL));
    return key;
}

/// Counter-based generator: output i is mix64(key + i * gamma). Streams with
/// different keys are independent and every draw is reproducible on any
/// platform (no std distributions are involved).
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

    constexpr std::uint64_t next() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound), bound > 0. Lemire's multiply-shift with
    /// rejection, so the result is unbiased.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
            if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
        }
    }

    /// Standard normal draw (Box-Muller, one value per call).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace colondef
