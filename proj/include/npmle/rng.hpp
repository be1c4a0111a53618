#pragma once

// Counter-based random streams.
//
// Every stream is Philox4x32-10 (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3") keyed by (master seed, purpose tag) and addressed by a
// 64-bit stream index:
//
//   key     = splitmix64(seed XOR fnv1a64(tag))        -> (key0 = low 32, key1 = high 32)
//   counter = (block low 32, block high 32, index low 32, index high 32)
//
// Each block yields four 32-bit words consumed in order. A double in [0, 1) is
// built from two consecutive words a, b as ((a << 32 | b) >> 11) * 2^-53.
// The derivation uses only integer arithmetic, so any language can reproduce a
// stream bit for bit.

#include <array>
#include <cstdint>
#include <string_view>

namespace npmle {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    // Uniform on [0, 1).
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform on {0, ..., n - 1}; rejection sampling, so unbiased.
    std::uint32_t uniform_index(std::uint32_t n);
    // Index k with probability weights[k]; weights must be nonnegative with positive sum.
    template<typename Range>
    std::size_t categorical(const Range& weights);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t index() const { return index_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t index_;
    PhiloxKey key_;
    std::uint64_t block_ = 0;
    PhiloxCounter buffer_{};
    int used_ = 4;
};

template<typename Range>
std::size_t RandomStream::categorical(const Range& weights) {
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    double u = uniform() * total;
    double acc = 0.0;
    std::size_t k = 0;
    for (double w : weights) {
        acc += w;
        if (u < acc && w > 0.0) {
            return k;
        }
        ++k;
    }
    // u landed on the rounding gap above the running sum: take the last positive weight.
    std::size_t last = 0;
    k = 0;
    for (double w : weights) {
        if (w > 0.0) {
            last = k;
        }
        ++k;
    }
    return last;
}

} // namespace npmle
