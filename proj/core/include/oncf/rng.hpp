#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <span>

#include "oncf/error.hpp"

namespace oncf {

// splitmix64 finalizer; good avalanche, cheap, and stable across platforms.
constexpr std::uint64_t mixBits(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a label path,
// e.g. deriveSeed(seed, {epoch, batch}). Used everywhere sampling has to be
// reproducible from coordinates rather than from call order.
inline std::uint64_t deriveSeed(std::uint64_t seed, std::initializer_list<std::uint64_t> labels) {
    std::uint64_t h = mixBits(seed);
    for (std::uint64_t label : labels) {
        h = mixBits(h ^ mixBits(label));
    }
    return h;
}

// Deterministic RNG. The engine (mt19937_64) has standard-specified output;
// the distribution transforms live here because the std:: distributions are
// implementation-defined and would break byte-identical reruns across
// toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t nextU64() { return engine_(); }

    // Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(nextU64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound). Rejection sampling, no modulo bias.
    std::size_t uniformInt(std::size_t bound) {
        if (bound == 0) {
            throw IndexError("uniformInt: bound must be positive");
        }
        const std::uint64_t n = bound;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        for (;;) {
            const std::uint64_t v = nextU64();
            if (v < limit) {
                return static_cast<std::size_t>(v % n);
            }
        }
    }

    // Standard normal via Box-Muller; caches the second deviate.
    double gaussian() {
        if (hasSpare_) {
            hasSpare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        hasSpare_ = true;
        return radius * std::cos(angle);
    }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = uniformInt(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool hasSpare_ = false;
};

}  // namespace oncf
