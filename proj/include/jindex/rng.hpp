#pragma once

#include <cstdint>

namespace jindex::rng {

/// SplitMix64 finalizer. Bijective on 64-bit words with strong avalanche,
/// so distinct keys give statistically independent-looking outputs.
constexpr uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Combines a seed with up to four stream/index words into one key.
constexpr uint64_t key(uint64_t seed, uint64_t a = 0, uint64_t b = 0, uint64_t c = 0,
                       uint64_t d = 0) {
    uint64_t h = mix64(seed);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    h = mix64(h ^ d);
    return h;
}

/// Uniform in the open interval (0, 1).
inline double to_unit_open(uint64_t x) {
    // 53 mantissa bits; nudge 0 up so inverse-CDF transforms stay finite.
    double u = static_cast<double>(x >> 11) * 0x1.0p-53;
    if (u <= 0.0) u = 0x1.0p-53;
    return u;
}

/// Inverse of the standard normal CDF (Acklam's rational approximation
/// polished with one Halley step; absolute error ~1e-15).
double normal_quantile(double p);

/// Counter-based standard normal draw: the value is a pure function of the
/// key, independent of evaluation order.
inline double normal_at(uint64_t k) { return normal_quantile(to_unit_open(mix64(k))); }

/// Small sequential generator (SplitMix64 stream). Deterministic across
/// platforms; used where a stream of draws is more natural than a counter.
class Stream {
public:
    explicit Stream(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    double uniform() { return to_unit_open(next_u64()); }

    double normal() { return normal_quantile(uniform()); }

    /// Uniform integer in [0, n). Multiply-shift map; deterministic.
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

private:
    uint64_t state_;
};

}  // namespace jindex::rng
