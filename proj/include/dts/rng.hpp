#pragma once
// Deterministic random number generation.
//
// std::mt19937_64 output is pinned by the standard, but the standard
// distributions are not; deriving uniforms and normals from the raw 64-bit
// stream keeps traces byte-identical across toolchains.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace dts {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Replication r of a study runs on seed base^r; the xor keeps the published
// seed derivation trivial to restate, splitmix decorrelates nearby seeds
// before they reach the engine.
inline std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t rep) {
    return base_seed ^ rep;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    // Uniform on [0,1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on {0,...,n-1}.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Marsaglia polar method; consumes a variable number of engine draws but
    // is deterministic given the seed.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double mul = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * mul;
        have_spare_ = true;
        return u * mul;
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Index draw from unnormalized nonnegative weights; caller guarantees a
    // strictly positive total.
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.size() - 1;
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace dts
