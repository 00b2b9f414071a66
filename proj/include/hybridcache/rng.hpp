#pragma once

#include <cstdint>
#include <random>

namespace hybridcache {

// Seeded random source with a fixed draw discipline. All stochastic code in
// this library draws through this wrapper so that a (seed, draw index) pair
// maps to the same value everywhere: mt19937_64 is fully specified by the
// standard, and the unit/index mappings below avoid the
// implementation-defined std::uniform_*_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in {0, ..., bound-1}. Bias is < 2^-53 * bound, negligible for
    // the page counts used here.
    std::size_t next_index(std::size_t bound) {
        std::size_t i = static_cast<std::size_t>(next_unit() * static_cast<double>(bound));
        return i < bound ? i : bound - 1;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace hybridcache
