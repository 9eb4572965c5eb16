#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace dnefc {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// Output is a pure function of (key, counter), so any block of any stream can
// be produced on any thread without shared state.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMulA = 0xD2511F53u;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += kWeylA;
            key[1] += kWeylB;
        }
        return ctr;
    }
};

/// Identifies one independent random stream: a 64-bit key plus a 64-bit
/// stream id. Blocks within a stream are addressed by a 64-bit index.
class CounterStream {
public:
    constexpr CounterStream(std::uint64_t key, std::uint64_t stream) noexcept
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          stream_(stream) {}

    /// Stream id built from a domain tag and two sub-indices.
    static constexpr std::uint64_t make_id(std::uint32_t domain, std::uint32_t a, std::uint32_t b) noexcept {
        return (std::uint64_t{domain} << 56) ^ (std::uint64_t{a} << 24) ^ std::uint64_t{b};
    }

    constexpr Philox4x32::Counter block(std::uint64_t index) const noexcept {
        return Philox4x32::block({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                  static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                                 key_);
    }

private:
    Philox4x32::Key key_;
    std::uint64_t stream_;
};

/// Uniform in (0, 1]; never returns 0 so it is safe under log().
inline double uniform_open0(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11; // 53 bits
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

/// Uniform in [0, 1).
inline double uniform_closed0(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

/// Two standard normals from one Philox block via Box-Muller.
inline std::array<double, 2> box_muller(const Philox4x32::Counter& b) noexcept {
    const double u1 = uniform_open0(b[0], b[1]);
    const double u2 = uniform_closed0(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

/// Sequential reader over a CounterStream, for code that consumes a variable
/// number of draws (synthetic data generation, shuffles).
class StreamReader {
public:
    explicit StreamReader(CounterStream stream) noexcept : stream_(stream) {}

    double uniform() noexcept {
        const auto b = next_block();
        return uniform_closed0(b[0], b[1]);
    }

    double normal() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const auto z = box_muller(next_block());
        spare_ = z[1];
        have_spare_ = true;
        return z[0];
    }

    /// Uniform integer in [0, bound) by rejection-free multiply-shift.
    std::uint64_t below(std::uint64_t bound) noexcept {
        const auto b = next_block();
        const std::uint64_t x = (std::uint64_t{b[0]} << 32) | b[1];
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(x) * bound) >> 64);
    }

private:
    Philox4x32::Counter next_block() noexcept { return stream_.block(index_++); }

    CounterStream stream_;
    std::uint64_t index_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace dnefc
