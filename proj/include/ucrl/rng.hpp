#pragma once

#include <cstdint>
#include <random>

namespace ucrl {

// Seeded generator with draw helpers that avoid std::uniform_*_distribution,
// whose output is implementation-defined. mt19937_64 itself is pinned by the
// standard, so runs reproduce bit-for-bit across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform index in [0, n). Modulo bias is negligible for n << 2^64 and
    // keeps the draw portable.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

private:
    std::mt19937_64 engine_;
};

} // namespace ucrl
