#pragma once

#include <cmath>
#include <cstdint>

namespace bidshade {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Named substream derivation: every generation stream owns its own seed so
// parallel streams never share a sequence.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ (0xd1342543de82ef95ull * (stream + 1)));
}

// Deterministic xorshift64* generator. Identical seeds give identical draw
// sequences on every platform; no global state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
        if (state_ == 0) state_ = 0x9e3779b97f4a7c15ull;
    }

    std::uint64_t next_u64() noexcept {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 2685821657736338717ull;
    }

    // Uniform in [0, 1), top 53 bits as the double mantissa.
    double uniform01() noexcept {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; the second draw of each pair is cached.
    double normal() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.28318530717958647692 * uniform01();
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    // Integer in [0, n). Modulo bias is immaterial for n far below 2^64.
    std::uint64_t below(std::uint64_t n) noexcept { return n ? next_u64() % n : 0; }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace bidshade
