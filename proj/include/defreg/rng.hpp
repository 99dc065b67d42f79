#pragma once

#include <cstdint>

namespace defreg {

// splitmix64 is the reference PRNG for everything seeded in this project
// (sampler epochs, splits, synthetic data). The constants are the ones from
// Steele, Lea & Flood's original; fixing them keeps seeded sequences
// reproducible across implementations, not just across runs.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n) by the multiply-shift map (bias < n / 2^64).
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// One splitmix64 output step on a bare value; used to derive stream seeds.
inline std::uint64_t splitmix64_once(std::uint64_t x) {
    return SplitMix64(x).next();
}

} // namespace defreg
