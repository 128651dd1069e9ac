#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bcrisk {

/// Deterministic random source. Every stochastic component derives its own
/// generator from (seed, stream name, index) so results do not depend on
/// evaluation order or on how work is distributed across workers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Named sub-stream: same (seed, name, index) always yields the same
    /// sequence, independent of any other stream.
    static Rng stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53-bit resolution. Bit-stable across
    /// platforms (does not go through std::uniform_real_distribution).
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t next_below(std::uint64_t n);

    /// Standard normal via Box-Muller (consumes two uniforms per call).
    double next_normal();

    /// Uniform double in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

private:
    std::mt19937_64 engine_;
};

/// FNV-1a 64-bit hash, used for stream names and config fingerprints.
std::uint64_t fnv1a64(std::string_view data);

/// SplitMix64 finalizer, used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace bcrisk
