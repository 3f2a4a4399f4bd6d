#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace spikeloom {

// Counter-based random stream (Philox4x32-10). A stream is fully described by
// (seed, stream id, draw counter): reconstructing a stream from its state
// continues the exact same sequence, and distinct stream ids never collide.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0)
        : seed_(seed), stream_(stream), counter_(counter) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::uint64_t counter() const noexcept { return counter_; }
    void set_counter(std::uint64_t c) noexcept { counter_ = c; }

    std::uint32_t next_u32() {
        const std::uint64_t block = counter_ >> 2;
        if (block != cached_block_ || !cache_valid_) {
            cache_ = philox_block(seed_, stream_, block);
            cached_block_ = block;
            cache_valid_ = true;
        }
        const std::uint32_t v = cache_[counter_ & 3u];
        ++counter_;
        return v;
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // uniform integer in [0, n); n must be > 0
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // standard normal via Box-Muller; consumes exactly four 32-bit draws
    double normal() {
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    static std::array<std::uint32_t, 4> philox_block(std::uint64_t key64,
                                                     std::uint64_t stream,
                                                     std::uint64_t block) noexcept {
        std::uint32_t c0 = static_cast<std::uint32_t>(block);
        std::uint32_t c1 = static_cast<std::uint32_t>(block >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(stream);
        std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
        std::uint32_t k0 = static_cast<std::uint32_t>(key64);
        std::uint32_t k1 = static_cast<std::uint32_t>(key64 >> 32);
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = 0xD2511F53ull * c0;
            const std::uint64_t p1 = 0xCD9E8D57ull * c2;
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0;
            c1 = n1;
            c2 = n2;
            c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return {c0, c1, c2, c3};
    }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t counter_ = 0;
    std::uint64_t cached_block_ = 0;
    std::array<std::uint32_t, 4> cache_{};
    bool cache_valid_ = false;
};

}  // namespace spikeloom
