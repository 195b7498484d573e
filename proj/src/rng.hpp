#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace smoothboost {

// All randomness flows through this wrapper.  The engine (mt19937_64) has a
// bit-exact sequence fixed by the standard, and the distribution transforms
// below are hand-rolled because libstdc++'s distribution objects are not
// portable across implementations.  Given one seed, every draw is identical
// on every platform and at every thread count.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Decorrelated child seed for a numbered substream (one per boosting
// iteration, one per CV fold, ...).  Keeps sibling streams independent of
// how many draws each one consumes.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt + 0x632be59bd9b4e019ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1) with 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller.  Deliberately no spare-value caching:
    // one draw consumes exactly two engine words, so consumption is easy to
    // reason about when auditing replay.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) {
        return mean + sd * normal();
    }

    // Uniform on {0, ..., n-1}.  The multiply-and-floor map is negligibly
    // biased for the n we ever use (n << 2^53).
    std::size_t uniform_index(std::size_t n) {
        auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

    bool bernoulli(double p) {
        return uniform() < p;
    }

private:
    std::mt19937_64 engine_;
};

// Fisher-Yates permutation of {0, ..., n-1}.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = rng.uniform_index(i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

// k distinct values from {0, ..., n-1}, returned sorted ascending so that
// downstream iteration order is canonical.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + rng.uniform_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace smoothboost
