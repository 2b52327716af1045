#pragma once

// Seeded random streams. Every consumer draws from its own stream derived
// from (run seed, purpose, ids) so adding draws in one place never shifts
// another consumer's sequence. Uniform and normal variates are computed
// here rather than with <random> distributions, whose outputs are
// implementation-defined.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bcfl {

enum class Stream : std::uint64_t {
    Dataset = 1,
    InitModel = 2,
    Attack = 3,
    Monitor = 4,
    Latency = 5,
    Keys = 6,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Order-sensitive mix of several words into one seed.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words);

/// Uniform double in [0, 1) from a single 64-bit word (top 53 bits).
inline double unit_interval(std::uint64_t word) {
    return static_cast<double>(word >> 11) * 0x1.0p-53;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng stream(std::uint64_t seed, Stream purpose, std::uint64_t a = 0, std::uint64_t b = 0) {
        return Rng(mix_seed({seed, static_cast<std::uint64_t>(purpose), a, b}));
    }

    std::uint64_t next() { return engine_(); }
    double uniform01() { return unit_interval(engine_()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal (Box-Muller, no caching).
    double normal();

private:
    std::mt19937_64 engine_;
};

}  // namespace bcfl
