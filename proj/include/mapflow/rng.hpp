#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mapflow {

// Deterministic random source: std::mt19937_64 with hand-rolled value
// mappings, so a seed pins the exact sequence (std distributions are not
// portable across standard libraries, the raw engine output is).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1), 53-bit resolution
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    float uniform(float lo, float hi) {
        return lo + static_cast<float>(uniform() * (static_cast<double>(hi) - lo));
    }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(uniform() * (static_cast<double>(hi) - lo + 1.0));
    }

    float normal(float mean, float stddev) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.141592653589793 * u2;
        spare_ = static_cast<float>(r * std::sin(a));
        has_spare_ = true;
        return mean + stddev * static_cast<float>(r * std::cos(a));
    }

    // Derive an independent stream: splitmix64 of (seed xor tagged constant).
    static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
        std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (tag + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
    float spare_ = 0.0f;
    bool has_spare_ = false;
};

} // namespace mapflow
