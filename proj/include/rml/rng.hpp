#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rml {

// Seeded generator with distribution helpers that do not depend on the
// standard library's (implementation-defined) distribution algorithms, so
// a given seed produces the same draw sequence on any toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n), n > 0. Lemire-style multiply-shift.
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<__uint128_t>(engine_()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via Box-Muller; caches the second deviate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace rml
