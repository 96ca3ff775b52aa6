#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mlmc {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every sample
// owns an independent stream addressed by (seed, level, sample, purpose), so
// draws never depend on thread count or evaluation order.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }

private:
    static Counter single_round(const Counter& c, const Key& k) noexcept {
        const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
        const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

// Independent sub-streams of one sample. Adding draws to one purpose never
// shifts the draws of another.
enum class StreamPurpose : std::uint32_t {
    brownian = 0,
    jumps = 1,
    inner = 2,
    pilot = 3,
};

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t level = 0;
    std::uint64_t sample = 0;
    StreamPurpose purpose = StreamPurpose::brownian;

    StreamKey with_purpose(StreamPurpose p) const noexcept {
        StreamKey k = *this;
        k.purpose = p;
        return k;
    }

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

class CounterStream {
public:
    explicit CounterStream(const StreamKey& key) noexcept
        : key_{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)},
          base_{static_cast<std::uint32_t>(key.sample), static_cast<std::uint32_t>(key.sample >> 32),
                (key.level << 8) ^ static_cast<std::uint32_t>(key.purpose), 0u} {}

    std::uint32_t next_u32() noexcept {
        if (used_ == 4) refill();
        return block_[used_++];
    }

    // Uniform on the open interval (0, 1) with 53 bits of resolution.
    double uniform() noexcept {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    // Box-Muller; the second variate of each pair is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

    double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

private:
    void refill() noexcept {
        Philox4x32::Counter ctr = base_;
        ctr[3] = block_index_++;
        block_ = Philox4x32::apply(ctr, key_);
        used_ = 0;
    }

    Philox4x32::Key key_;
    Philox4x32::Counter base_;
    Philox4x32::Counter block_{};
    std::uint32_t block_index_ = 0;
    int used_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mlmc
