#pragma once

#include <cmath>
#include <cstdint>

namespace bandcast {

// Deterministic, platform-independent RNG used everywhere instead of
// <random> distributions (whose output is implementation-defined).
// Streams are split by hashing a key path onto the master seed, so
// per-(tile, window) generation is order- and thread-count-independent.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    // SplitMix64 step.
    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller, one variate per call (no cached spare, keeps streams
    // position-independent of call parity).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Standard normal truncated to |z| <= max_abs_z by rejection.
    double truncated_normal(double max_abs_z = 3.0) {
        for (;;) {
            const double z = normal();
            if (std::abs(z) <= max_abs_z) return z;
        }
    }

    // Inversion by sequential search; switches to a rounded normal
    // approximation for large lambda to avoid pathological loop lengths.
    int64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda > 600.0) {
            const double v = lambda + std::sqrt(lambda) * normal();
            return v < 0.0 ? 0 : static_cast<int64_t>(std::llround(v));
        }
        const double u = uniform();
        double p = std::exp(-lambda);
        double cdf = p;
        int64_t k = 0;
        while (u > cdf && k < 100000) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

  private:
    uint64_t state_;
};

// Hash-combine for deriving independent substreams from a master seed.
inline uint64_t mix_key(uint64_t h, uint64_t v) {
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    v ^= v >> 31;
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

inline Rng substream(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0, uint64_t d = 0) {
    uint64_t h = seed;
    h = mix_key(h, a);
    h = mix_key(h, b);
    h = mix_key(h, c);
    h = mix_key(h, d);
    return Rng(h);
}

}  // namespace bandcast
