#include <npmle/rng.hpp>

namespace npmle {

namespace {
constexpr std::uint32_t PHILOX_M0 = 0xD2511F53u;
constexpr std::uint32_t PHILOX_M1 = 0xCD9E8D57u;
constexpr std::uint32_t PHILOX_W0 = 0x9E3779B9u;
constexpr std::uint32_t PHILOX_W1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}
}

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += PHILOX_W0;
            k[1] += PHILOX_W1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(PHILOX_M0, c[0], hi0, lo0);
        mulhilo(PHILOX_M1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    return h;
}

RandomStream::RandomStream(std::uint64_t seed, std::string_view tag, std::uint64_t index)
    : seed_(seed), index_(index) {
    std::uint64_t k = splitmix64(seed ^ fnv1a64(tag));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

void RandomStream::refill() {
    PhiloxCounter counter = {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                             static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32)};
    buffer_ = philox4x32_10(counter, key_);
    ++block_;
    used_ = 0;
}

std::uint32_t RandomStream::next_u32() {
    if (used_ == 4) {
        refill();
    }
    return buffer_[used_++];
}

std::uint64_t RandomStream::next_u64() {
    std::uint64_t a = next_u32();
    std::uint64_t b = next_u32();
    return (a << 32) | b;
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint32_t RandomStream::uniform_index(std::uint32_t n) {
    // Reject the top partial bucket of the 32-bit range.
    std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
    for (;;) {
        std::uint32_t r = next_u32();
        if (r >= threshold) {
            return r % n;
        }
    }
}

} // namespace npmle
