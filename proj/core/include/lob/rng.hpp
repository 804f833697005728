#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lob {

/// Mixes a 64-bit value into a well-distributed seed (splitmix64 step).
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic RNG. Wraps std::mt19937_64 (whose output sequence is
/// pinned by the standard) and derives all floating point draws with
/// explicit arithmetic so results are bit-identical across platforms;
/// std::uniform_real_distribution et al. are implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one value per call, no caching,
    /// so interleaved streams stay reproducible).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Uniform integer in [0, n). Rejection-free modulo is fine here;
    /// n is always tiny relative to 2^64 so the bias is negligible,
    /// but determinism is what matters.
    uint64_t below(uint64_t n) { return eng_() % n; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Fisher-Yates shuffle with the deterministic index draw above.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

} // namespace lob
