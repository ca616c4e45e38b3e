#pragma once

#include <cstdint>
#include <random>

namespace exp3mle {

// Reproducible random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; uniforms are built from the top 53 bits
// so no library-specific distribution code is involved.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for replicate `rep` at horizon `n`: base ^ mix(mix(n) ^ rep).
// Depends only on its arguments, so extending a grid never shifts existing seeds.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t n, std::uint64_t rep) noexcept {
    return base ^ mix64(mix64(n) ^ rep);
}

}  // namespace exp3mle
