#pragma once

#include <cmath>
#include <cstdint>

namespace sbn {

/// Deterministic SplitMix64 generator (Steele, Lea & Flood 2014).
/// The state advances by the 64-bit golden-ratio increment and each
/// output is the mixed state, so the stream is a pure function of the
/// seed. Sub-streams are derived by hashing the original seed with a
/// tag, which keeps weight-init, dropout and shuffle streams
/// independent of each other.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(mix(seed)) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes two uniforms per call.
    double normal() {
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Bernoulli(p) draw, used for dropout masks.
    bool bernoulli(double p) { return uniform() < p; }

    /// Independent stream derived from the original seed and a tag.
    Rng substream(std::uint64_t tag) const {
        return Rng(mix(seed_ ^ (0xBF58476D1CE4E5B9ULL * (tag + 1))));
    }

    std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t state_;
};

} // namespace sbn
