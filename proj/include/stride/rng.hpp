#pragma once

#include <cstdint>
#include <cmath>

namespace stride {

// SplitMix64 step. Good enough statistically for simulation use and trivial
// to reason about; the whole project derives its randomness from this one
// primitive so runs are reproducible from (master seed, stream tags) alone.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed-splitting: a child stream seed is splitmix64(base ^ splitmix64(tag)).
// Chaining tags gives hierarchical streams, e.g.
//   derive_seed(master, EVAL_TAG, generation, individual_id)
// Every component documents the tags it uses; results are independent of
// evaluation order and worker count by construction.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    return splitmix64(base ^ splitmix64(tag));
}
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t t1, std::uint64_t t2) {
    return derive_seed(derive_seed(base, t1), t2);
}
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t t1, std::uint64_t t2,
                                 std::uint64_t t3) {
    return derive_seed(derive_seed(base, t1, t2), t3);
}

// Value-semantic random stream. State is a single u64, so streams are cheap
// to copy and trivially serializable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]; safe as a log() argument.
    double uniform01_open_left() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Uniform integer in [0, n). Multiply-shift map; the O(n/2^64) bias is
    // far below anything observable here.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool coin() { return (next_u64() & 1u) != 0; }

    bool bernoulli(double p) { return uniform01() < p; }

    // Box-Muller, always consuming exactly two uniforms. No cached second
    // value, so the draw sequence is a pure function of the stream position.
    double normal(double mean, double stddev) {
        const double u1 = uniform01_open_left();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

} // namespace stride
