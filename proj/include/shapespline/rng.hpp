#pragma once

#include <cmath>
#include <cstdint>

// Counter-based pseudo-random generator: every draw is a hash of
// (seed, stream, counter), so a result is reproducible from those three
// integers alone, independent of call interleaving across replicates.

namespace shapespline {

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix64(seed ^ mix64(stream))) {}

    std::uint64_t next_u64() { return mix64(key_ + kGamma * ++counter_); }

    // Uniform on [0,1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal by Box-Muller; draws are generated in pairs and the
    // second of each pair is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u = uniform01();
        while (u <= 0.0) u = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u));
        const double angle = 2.0 * kPi * uniform01();
        cached_ = radius * std::sin(angle);
        has_cached_ = true;
        return radius * std::cos(angle);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
    static constexpr double kPi = 3.141592653589793238462643383279502884;

    // splitmix64 finalizer: bijective on 64-bit words, passes BigCrush when
    // applied to a Weyl sequence, which is exactly how it is used here.
    static std::uint64_t mix64(std::uint64_t z) {
        z += kGamma;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace shapespline
