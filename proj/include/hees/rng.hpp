// Deterministic random number generation. Distribution mappings are written
// out explicitly (inverse CDF / Box-Muller) instead of using <random>
// distributions, whose output is implementation-defined; the same seed must
// reproduce the same trace on any standard library.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hees {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for trial `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Exponential with the given mean (inverse CDF; argument of log is in
    // (0,1], never 0).
    double exponential_mean(double mean) { return -mean * std::log1p(-uniform()); }

    // Unit-mean exponential; distribution of |H|^2 under Rayleigh fading.
    double rayleigh_power() { return exponential_mean(1.0); }

    // Standard normal (Box-Muller, one value per call keeps the stream layout
    // independent of call parity).
    double gaussian() {
        double u1 = 1.0 - uniform();  // (0,1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace hees
