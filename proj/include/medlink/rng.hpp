#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace medlink {

// Deterministic RNG used everywhere randomness is needed. Wraps a splitmix64
// stream so results do not depend on the standard library's distribution
// implementations. One run seed fans out to named substreams.
class Rng {
 public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ 0x9E3779B97F4A7C15ull) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), n > 0.
    std::uint64_t next_below(std::uint64_t n) {
        // Rejection sampling keeps the draw unbiased.
        std::uint64_t limit = ~0ull - (~0ull % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Box-Muller; one draw per call, the pair's second half is discarded to
    // keep the stream position independent of call parity.
    double normal(double mean, double stddev);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; i--) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derives an independent substream for a named purpose.
    Rng fork(std::string_view label) const;

 private:
    std::uint64_t state_;
};

}  // namespace medlink
