#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace idim {

// splitmix64: a 64-bit counter-based generator (Steele, Lea & Flood 2014).
// The state advances by a fixed odd increment and the output is a bijective
// mix of the counter, so streams can be split cheaply and the sequence is
// identical on every platform. All Monte-Carlo code in this project draws
// from this generator; std::random distributions are never used because
// their output is implementation-defined.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; never zero, safe under log().
    double next_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Standard normal via the Marsaglia polar method (no libm trig, so the
    // stream depends only on sqrt/log which are stable across platforms).
    double next_gauss() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_double() - 1.0;
            v = 2.0 * next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
} // namespace detail

// Derives an independent stream key from a master seed and a task path,
// e.g. derive_stream(seed, {dim, realization}). Tasks seeded this way give
// schedule-independent results in parallel sweeps.
inline std::uint64_t derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = detail::mix64(seed + 0x9E3779B97F4A7C15ull);
    for (std::uint64_t c : path) {
        s = detail::mix64(s ^ (detail::mix64(c + 0x9E3779B97F4A7C15ull) + 0x632BE59BD9B4E019ull));
    }
    return s;
}

} // namespace idim
