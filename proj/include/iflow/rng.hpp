#pragma once

#include <cstdint>
#include <random>

namespace iflow {

/// Seeded generator with a platform-independent uniform draw (std distributions are
/// implementation-defined, which would break cross-toolchain reproducibility).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream derived from (seed, stream) via splitmix64.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) { return Rng(splitmix(seed ^ splitmix(stream + 1))); }

    /// Uniform in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    std::uint64_t next() { return engine_(); }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace iflow
