#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "radarsim/constants.hpp"

namespace radarsim {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A generator is identified by (seed, stream); the 128-bit counter is laid
/// out as {position_lo, position_hi, stream_lo, stream_hi} and the key is the
/// 64-bit seed. Any (seed, stream, position) triple maps to the same four
/// words on every platform, so work split across threads stays reproducible
/// as long as each unit of work owns its stream.
class Philox {
public:
    using Block = std::array<std::uint32_t, 4>;

    static Block block(Block counter, std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            counter = single_round(counter, key);
            key[0] += kW0;
            key[1] += kW1;
        }
        return counter;
    }

    Philox(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint32_t next_u32() {
        if (lane_ == 4) refill();
        return buffer_[lane_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform double in the open interval (0, 1), 53-bit resolution.
    double uniform() {
        const std::uint64_t bits = next_u64() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal deviate (Box-Muller, both outputs used).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        spare_ = radius * std::sin(2.0 * kPi * u2);
        has_spare_ = true;
        return radius * std::cos(2.0 * kPi * u2);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static Block single_round(const Block& c, const std::array<std::uint32_t, 2>& k) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    void refill() {
        const Block counter{static_cast<std::uint32_t>(position_),
                            static_cast<std::uint32_t>(position_ >> 32),
                            static_cast<std::uint32_t>(stream_),
                            static_cast<std::uint32_t>(stream_ >> 32)};
        buffer_ = block(counter, {static_cast<std::uint32_t>(seed_),
                                  static_cast<std::uint32_t>(seed_ >> 32)});
        ++position_;
        lane_ = 0;
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t position_{0};
    Block buffer_{};
    int lane_{4};
    double spare_{0.0};
    bool has_spare_{false};
};

/// Stream identifiers. Layout: bits 63..48 domain, 47..24 frame, 23..0 item.
enum class StreamDomain : std::uint64_t {
    kNoise = 1,          // item = chirp (column) index
    kParticleInit = 2,   // item = 0
    kMotion = 3,         // item = 0
    kResample = 4,       // item = 0
    kOdometry = 5,       // item = 0
    kTest = 0xFFFF,
};

constexpr std::uint64_t stream_id(StreamDomain domain, std::uint64_t frame, std::uint64_t item) {
    return (static_cast<std::uint64_t>(domain) << 48) | ((frame & 0xFFFFFFu) << 24) |
           (item & 0xFFFFFFu);
}

}  // namespace radarsim
