#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "qreturn/numerics.hpp"

namespace qreturn {

/// SplitMix64 finalizer (Steele/Lea/Flood mixing constants). Fixed here
/// so every stream is bit-stable across platforms and runs.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Splittable seed derivation: (seed, stream, index) -> independent seed.
/// Ensemble samples use stream = grid index and index = sample index, so
/// any sample can be regenerated in isolation.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index) {
    std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ULL);
    h = mix64(h ^ (stream + 0xD1B54A32D192ED03ULL));
    h = mix64(h ^ (index + 0x8CB92BA72F3D8DD7ULL));
    return h;
}

/// Sequential SplitMix64 generator.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [-r, r).
    double next_symmetric(double r) { return r * (2.0 * next_double() - 1.0); }

    /// Uniform on the open complex disk of given radius, by rejection from
    /// the bounding square. The exact origin is rejected as well, so the
    /// result is always nonzero.
    Complex next_disk(double radius) {
        for (;;) {
            const double re = next_symmetric(radius);
            const double im = next_symmetric(radius);
            const double r2 = re * re + im * im;
            if (r2 < radius * radius && r2 > 0.0) return {re, im};
        }
    }

    /// Standard normal via Box-Muller.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    Complex next_complex_gaussian() {
        const double re = next_gaussian();
        const double im = next_gaussian();
        return {re, im};
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace qreturn
