#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include "invnet/error.hpp"

namespace invnet {

/// Derives an independent sub-stream seed from a base seed and a stream tag
/// (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic random source. Distributions are implemented by hand so a
/// fixed seed yields an identical stream on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Uniform index in [0, n), unbiased.
    std::size_t index(std::size_t n) {
        if (n == 0) {
            throw Error("Rng::index: empty range");
        }
        const std::uint64_t bound = n;
        const std::uint64_t reject = (0ull - bound) % bound;  // 2^64 mod n
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x <= std::numeric_limits<std::uint64_t>::max() - reject) {
                return static_cast<std::size_t>(x % bound);
            }
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace invnet
