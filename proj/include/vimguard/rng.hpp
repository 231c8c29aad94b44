#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace vimguard {

/// Seeded PRNG used by every stochastic stage.
///
/// The raw generator is std::mt19937_64, whose output stream is fixed by the
/// C++ standard, so identical seeds give identical streams on every platform.
/// All distribution mappings (uniform, integer, normal) are hand-rolled here
/// because the std:: distribution objects are not bit-stable across standard
/// library implementations. Tests pin the first outputs for a known seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n), n >= 1, by rejection sampling.
    uint64_t uniform_int(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller; the second sample of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Normal resampled until |z| <= clip, then scaled by stddev.
    double truncated_normal(double stddev, double clip = 2.0) {
        double z = normal();
        while (std::abs(z) > clip) z = normal();
        return z * stddev;
    }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace vimguard
