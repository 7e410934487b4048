#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rpas {

/// SplitMix64 finalizer; full avalanche on all 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Per-run seed derived from a sweep seed and a run index.
constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
    return mix64(mix64(base_seed) ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

/// Deterministic stream: std::mt19937_64 is fully specified by the standard,
/// unlike the std distributions, so variates are drawn by hand.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Exp(rate) by inverse CDF; 1 - U lies in (0, 1] so the log is finite.
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Uniform integer on [0, n] inclusive; rejection sampling keeps it unbiased.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t range = n + 1;
        const std::uint64_t limit = (~std::uint64_t{0} / range) * range;
        std::uint64_t x = 0;
        do {
            x = engine_();
        } while (x >= limit);
        return x % range;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace rpas
