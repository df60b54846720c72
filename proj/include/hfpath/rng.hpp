#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace hfpath {

// Independent shock channels inside one replication.
enum class Channel : std::uint32_t {
    brownian = 0,      // W driving X
    vol_brownian = 1,  // V driving sigma
    jumps = 2,         // compound Poisson for X
    vol_jumps = 3,     // compound Poisson for sigma
    limit_law = 4,     // extension randomness (kappa, W~, W')
    auxiliary = 5,
};

// Identifies one replication of one experiment: (master seed, replication id).
struct SeedStream {
    std::uint64_t master = 0;
    std::uint64_t replication = 0;
};

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// The key is the 64-bit master seed; the 128-bit counter carries
// (draw counter, interval, replication, channel), so every
// (replication, interval, channel) triple owns a disjoint stream and
// results never depend on the order in which streams are consumed.
class Philox {
public:
    using result_type = std::uint32_t;

    Philox(const SeedStream& seed, std::uint32_t interval, Channel channel) noexcept
        : key_{static_cast<std::uint32_t>(seed.master), static_cast<std::uint32_t>(seed.master >> 32)},
          ctr_{0u, interval, static_cast<std::uint32_t>(seed.replication),
               (static_cast<std::uint32_t>(seed.replication >> 32) << 8) ^ static_cast<std::uint32_t>(channel)} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (pos_ == 4) {
            refill();
        }
        return out_[pos_++];
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    void refill() noexcept {
        std::array<std::uint32_t, 4> c = ctr_;
        std::array<std::uint32_t, 2> k = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        out_ = c;
        pos_ = 0;
        ++ctr_[0];
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> out_{};
    int pos_ = 4;
};

// Standard normal and uniform draws bound to one Philox stream.
class ShockSource {
public:
    ShockSource(const SeedStream& seed, std::uint32_t interval, Channel channel) noexcept
        : engine_(seed, interval, channel) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    Philox& engine() noexcept { return engine_; }

private:
    Philox engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
    boost::random::uniform_01<double> uniform_;
};

}  // namespace hfpath
